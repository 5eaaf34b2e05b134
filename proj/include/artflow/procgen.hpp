#pragma once

#include "artflow/eval.hpp"

namespace artflow {

enum class ProcKind { Drawer, Door, Lid, Cabinet2Joint };

const char* to_string(ProcKind kind);
std::optional<ProcKind> proc_kind_from_string(const std::string& name);

struct Range {
  double lo = 0.0, hi = 0.0;
  double sample(Rng& rng) const { return rng.uniform(lo, hi); }
};

/// Desk-scale procedural object family. All objects face +x and open in the
/// positive joint direction.
struct ProcSpec {
  ProcKind kind = ProcKind::Drawer;
  std::uint64_t seed = 0;

  // Drawer: thin front slab sliding out of a box base along +x.
  Range drawer_width{0.2, 0.3};
  Range drawer_height{0.15, 0.25};
  // Standoff of the front plate from the base; kept larger than typical
  // normal-estimation neighborhoods so the two surfaces never blend.
  Range drawer_thickness{0.08, 0.12};
  Range drawer_range{0.15, 0.3};

  // Door: thin panel hinged on a vertical edge, limits [0, pi/2].
  Range door_width{0.12, 0.22};
  Range door_height{0.45, 0.7};

  // Lid: quarter-sphere shell hinged at its straight rim over a pot body.
  Range lid_radius{0.12, 0.2};
};

ArticulatedObject generate(const ProcSpec& spec);

/// Fixed 20-object mixed suite (drawers, doors, lids, two-joint cabinets)
/// used by the acceptance runs; deterministic per seed.
std::vector<SuiteObject> make_acceptance_suite(std::uint64_t seed);

/// Random procedural object of any kind, for property tests.
ArticulatedObject random_object(std::uint64_t seed);

/// Uniform random in-range state for every joint.
JointState random_state(const ArticulatedObject& obj, std::uint64_t seed);

}  // namespace artflow
