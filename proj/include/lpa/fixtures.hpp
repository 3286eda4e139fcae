#pragma once

// Synthetic instances with known structure: a rotated-manifold pair for the
// alignment trainer (recover a planted orthogonal map) and a 3-class toy
// pair task whose labels are encoded in the geometric relation between the
// sides. Both tests and the CLI's fixture subcommand build from here.

#include <cstdint>

#include "lpa/embeddings.hpp"
#include "lpa/tasker.hpp"
#include "lpa/types.hpp"

namespace lpa {

struct RotationFixtureConfig {
  Index n = 500;
  Index dim = 10;
  Index n_train = 50;
  Index n_val = 150;
  Index n_test = 100;
  double noise_sigma = 0.0;  // Gaussian noise on training-pair targets only
  std::uint64_t seed = 0;

  void validate() const;
};

struct RotationFixture {
  EmbeddingMatrix src;  // n unit-norm points
  EmbeddingMatrix tgt;  // src rows under the planted map (+ supervision noise)
  Matrix q;             // the planted orthogonal map, apply_map convention
  Lexicon train, val, test;
};

// Unit points, a Haar-random orthogonal map (QR of a Gaussian matrix with
// the sign fix), disjoint supervision splits, noise only where supervision
// is read. Deterministic in the seed.
RotationFixture make_rotation_fixture(const RotationFixtureConfig& cfg);

struct TaskFixtureConfig {
  Index n_train = 300;
  Index n_test = 300;
  Index dim = 10;
  double noise = 0.25;         // per-coordinate Gaussian noise on side 2
  double center_spread = 4.0;  // norm of the contradiction displacement
  std::uint64_t seed = 0;

  void validate() const;
};

struct TaskFixture {
  PairDataset train;
  PairDataset test;
  Matrix planted;  // the side-1 → side-2 map behind the labels
};

// Three balanced classes whose labels live only in the pair relation, never
// in either side alone. Side-1 rows are one shared Gaussian cloud; a planted
// rotation R defines the relation: entailment pairs satisfy s2 ≈ R s1,
// contradiction pairs sit at a fixed offset from R s1, and neutral side-2
// rows are fresh unrelated points. Raw distance ‖s2 − s1‖ carries no label
// signal, so a classifier must estimate R from data — which is exactly what
// the alignment regularizer hands it.
TaskFixture make_task_fixture(const TaskFixtureConfig& cfg);

}  // namespace lpa
