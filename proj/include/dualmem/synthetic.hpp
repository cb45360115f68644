#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualmem/candidates.hpp"
#include "dualmem/case.hpp"

namespace dualmem {

// Seeded stream with latent subtypes. Each subtype has a gold label and a
// signature of finding words planted in every profile of that subtype. A
// round recurs an existing subtype with probability `recurrence`; otherwise
// it introduces a fresh one-off subtype.
struct SyntheticParams {
  std::size_t rounds = 100;
  std::size_t subtypes = 5;
  double recurrence = 0.4;
  std::uint64_t seed = 7;
  std::size_t pool_size = 800;
  std::size_t n_distractors = kDefaultDistractors;
  std::size_t signature_size = 3;
  std::size_t noise_words = 3;

  // Throws std::invalid_argument.
  void validate() const;
};

struct SyntheticStream {
  LabelPool pool;
  std::vector<StreamCase> cases;
  // Latent subtype per case: "r<k>" for recurring subtypes, "u<n>" for one-offs.
  std::vector<std::string> subtype;
};

// Disease-like names ("Chronic hepatic fibrosis"), seeded order.
LabelPool synthetic_label_pool(std::size_t size, std::uint64_t seed);

// Largest pool synthetic_label_pool can produce.
std::size_t max_synthetic_pool_size();

SyntheticStream generate_synthetic(const SyntheticParams& params);

}  // namespace dualmem
