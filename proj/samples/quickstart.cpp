// Copyright 2026 The sparse_ldp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end walk through the library: randomize a synthetic batch with
// Collision and CoCo, aggregate on the server, project, and account for
// shuffling.

#include <cstdio>
#include <vector>

#include "sparse_ldp.hpp"

int main() {
  using namespace sparse_ldp;

  const std::uint32_t d = 128, s = 8;
  const double epsilon = 1.0;
  const std::uint64_t master_seed = 2024;
  const auto data = gen_synthetic(20000, d, s, master_seed);
  Rng rng = make_rng(prf(master_seed, 1));

  // Collision: one output in [t] per user, frequency estimates for all 2d events.
  const auto collision = CollisionParams::make(d, s, epsilon, collision_optimal_t(s, epsilon));
  std::vector<PrivateView> views;
  for (std::uint64_t i = 0; i < data.size(); ++i) {
    const UserHash hash = draw_user_hash(master_seed, i, HashKind::kSingle, collision.base.t);
    views.push_back(collision_randomize(data[i], hash, collision, rng));
  }
  const auto raw = aggregate_frequencies(views, MechanismKind::kCollision, collision.base);
  const auto projected = project_to_simplex(raw, s);
  const auto truth = true_frequencies(data);
  std::printf("Collision t=%u  TVE raw %.3f  projected %.3f\n", collision.base.t, tve(raw.values, truth),
              tve(projected.values, truth));

  // CoCo: paired buckets give direct mean and non-missing estimates.
  const MechanismParams coco{d, s, epsilon, coco_choose_t(s, epsilon, CocoTarget::kMean)};
  views.clear();
  for (std::uint64_t i = 0; i < data.size(); ++i) {
    const UserHash hash = draw_user_hash(master_seed, i, HashKind::kPaired, coco.t);
    views.push_back(coco_randomize(data[i], hash, coco, rng));
  }
  const auto counts = count_event_hits(views, d, coco.t, HashKind::kPaired);
  const auto means = coco_estimates(counts, coco);
  std::printf("CoCo t=%u  mean MAE %.4f\n", coco.t, mae(means.mean, true_means(data).mean));

  // Shuffling the Collision reports of n users.
  const double delta = 1e-6;
  const double alpha = collision_alpha(s, epsilon, collision.base.t);
  std::printf("shuffled batch of %zu: (%.4f, %g)-DP, generic bound %.4f\n", data.size(),
              amplified_epsilon(data.size(), epsilon, alpha, delta),
              delta, amplified_epsilon(data.size(), epsilon, generic_clone_alpha(epsilon), delta));
  return 0;
}
