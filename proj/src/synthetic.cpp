#include "dualmem/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <string_view>

#include "dualmem/random.hpp"

namespace dualmem {

namespace {

constexpr std::array<std::string_view, 12> kQualifiers = {
    "acute",      "chronic",    "recurrent", "subacute", "idiopathic", "autoimmune",
    "hereditary", "infectious", "toxic",     "congenital", "primary",  "secondary"};

constexpr std::array<std::string_view, 12> kSites = {
    "renal",      "hepatic", "pulmonary", "cardiac", "cerebral",  "pancreatic",
    "gastric",    "splenic", "thyroid",   "adrenal", "cutaneous", "vascular"};

constexpr std::array<std::string_view, 10> kProcesses = {
    "vasculitis", "fibrosis",     "necrosis",   "insufficiency", "abscess",
    "carcinoma",  "stenosis",     "inflammation", "hemorrhage",  "dysplasia"};

// Signature findings. Disjoint from the label vocabulary and the noise words.
constexpr std::array<std::string_view, 48> kFindings = {
    "fever",        "cough",         "rash",          "jaundice",      "hematuria",
    "dyspnea",      "syncope",       "pruritus",      "ascites",       "edema",
    "tremor",       "ataxia",        "diplopia",      "hemoptysis",    "melena",
    "dysphagia",    "arthralgia",    "myalgia",       "alopecia",      "photophobia",
    "polyuria",     "polydipsia",    "tachycardia",   "bradycardia",   "hypotension",
    "hypertension", "hepatomegaly",  "splenomegaly",  "lymphadenopathy", "petechiae",
    "cyanosis",     "clubbing",      "wheezing",      "stridor",       "hoarseness",
    "vertigo",      "tinnitus",      "nystagmus",     "dysuria",       "oliguria",
    "proteinuria",  "anemia",        "leukocytosis",  "thrombocytopenia", "hyponatremia",
    "hyperkalemia", "hypoglycemia",  "orthopnea"};

// Background detail shared across subtypes at random.
constexpr std::array<std::string_view, 60> kNoise = {
    "smoker",     "diabetic",    "obese",       "athlete",     "pregnant",    "elderly",
    "postoperative", "traveler", "farmer",      "teacher",     "vegetarian",  "drinker",
    "fatigue",    "malaise",     "nausea",      "headache",    "dizziness",   "insomnia",
    "anxiety",    "chills",      "sweats",      "constipation", "diarrhea",   "bloating",
    "palpitations", "backache",  "numbness",    "tingling",    "weakness",    "cramps",
    "sneezing",   "congestion",  "earache",     "toothache",   "bruising",    "itching",
    "thirst",     "hunger",      "restlessness", "irritability", "forgetfulness", "drowsiness",
    "snoring",    "yawning",     "hiccups",     "flushing",    "pallor",      "stiffness",
    "soreness",   "swelling",    "tenderness",  "burning",     "clumsiness",  "hesitancy",
    "urgency",    "frequency",   "nocturia",    "heartburn",   "belching",    "anorexia"};

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

using Signature = std::vector<std::size_t>;  // sorted finding indices

std::size_t shared(const Signature& a, const Signature& b) {
  std::size_t n = 0;
  for (std::size_t x : a) n += std::binary_search(b.begin(), b.end(), x) ? 1 : 0;
  return n;
}

Signature draw_signature(SeededRng& rng, std::size_t size) {
  Signature s = rng.sample_without_replacement(kFindings.size(), size);
  std::sort(s.begin(), s.end());
  return s;
}

// Draws a signature unused so far and sharing at most one finding with each
// recurring signature; relaxes the constraints when the vocabulary runs out.
Signature fresh_signature(SeededRng& rng, std::size_t size, const std::set<Signature>& used,
                          const std::vector<Signature>& recurring) {
  constexpr int kAttempts = 2000;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Signature s = draw_signature(rng, size);
    if (used.count(s)) continue;
    bool ok = std::all_of(recurring.begin(), recurring.end(),
                          [&](const Signature& r) { return shared(s, r) <= 1; });
    if (ok) return s;
  }
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Signature s = draw_signature(rng, size);
    if (!used.count(s)) return s;
  }
  return draw_signature(rng, size);
}

}  // namespace

void SyntheticParams::validate() const {
  if (rounds == 0) throw std::invalid_argument("rounds must be positive");
  if (subtypes == 0) throw std::invalid_argument("subtypes must be positive");
  if (!(recurrence >= 0.0 && recurrence <= 1.0))
    throw std::invalid_argument("recurrence must lie in [0, 1]");
  if (pool_size < 2 || pool_size > max_synthetic_pool_size())
    throw std::invalid_argument("pool_size must lie in [2, " +
                                std::to_string(max_synthetic_pool_size()) + "]");
  if (n_distractors == 0 || n_distractors >= pool_size)
    throw std::invalid_argument("n_distractors must lie in [1, pool_size)");
  if (subtypes >= pool_size) throw std::invalid_argument("subtypes must be smaller than pool_size");
  if (signature_size == 0 || signature_size > 8)
    throw std::invalid_argument("signature_size must lie in [1, 8]");
  if (noise_words > 10) throw std::invalid_argument("noise_words must be at most 10");
}

std::size_t max_synthetic_pool_size() {
  return kQualifiers.size() * kSites.size() * kProcesses.size();
}

LabelPool synthetic_label_pool(std::size_t size, std::uint64_t seed) {
  if (size == 0 || size > max_synthetic_pool_size())
    throw std::invalid_argument("unsupported synthetic pool size " + std::to_string(size));
  std::vector<std::string> all;
  all.reserve(max_synthetic_pool_size());
  for (auto q : kQualifiers)
    for (auto s : kSites)
      for (auto p : kProcesses)
        all.push_back(capitalize(std::string(q) + " " + std::string(s) + " " + std::string(p)));
  SeededRng rng(derive_seed(seed, 0x9001));
  rng.shuffle(all);
  all.resize(size);
  return LabelPool(std::move(all));
}

SyntheticStream generate_synthetic(const SyntheticParams& params) {
  params.validate();
  SyntheticStream out{synthetic_label_pool(params.pool_size, params.seed), {}, {}};
  SeededRng rng(derive_seed(params.seed, 0x57AE));
  const auto& labels = out.pool.labels();

  // Recurring subtypes: distinct golds, signatures pairwise sharing <= 1 finding.
  std::vector<std::size_t> gold_order = rng.sample_without_replacement(labels.size(), labels.size());
  std::vector<std::string> recurring_gold;
  std::vector<Signature> recurring_sig;
  std::set<Signature> used;
  for (std::size_t k = 0; k < params.subtypes; ++k) {
    recurring_gold.push_back(labels[gold_order[k]]);
    Signature s = fresh_signature(rng, params.signature_size, used, recurring_sig);
    used.insert(s);
    recurring_sig.push_back(std::move(s));
  }

  // One-off golds come from the remaining labels without replacement, cycling
  // when exhausted.
  std::vector<std::size_t> oneoff_labels(gold_order.begin() + static_cast<std::ptrdiff_t>(params.subtypes),
                                         gold_order.end());
  std::size_t next_oneoff = 0;
  std::size_t oneoff_count = 0;

  LexicalScorer scorer;
  CandidateOptions copts;
  copts.n_distractors = params.n_distractors;

  for (std::size_t t = 0; t < params.rounds; ++t) {
    std::string gold;
    Signature sig;
    std::string subtype;
    if (rng.bernoulli(params.recurrence)) {
      std::size_t k = rng.uniform_index(params.subtypes);
      gold = recurring_gold[k];
      sig = recurring_sig[k];
      subtype = "r" + std::to_string(k);
    } else {
      if (next_oneoff == oneoff_labels.size()) {
        rng.shuffle(oneoff_labels);
        next_oneoff = 0;
      }
      gold = labels[oneoff_labels[next_oneoff++]];
      sig = fresh_signature(rng, params.signature_size, used, recurring_sig);
      used.insert(sig);
      subtype = "u" + std::to_string(oneoff_count++);
    }

    // Findings appear in a per-case order, interleaved with noise.
    std::vector<std::string> words;
    for (std::size_t f : sig) words.emplace_back(kFindings[f]);
    for (std::size_t n : rng.sample_without_replacement(kNoise.size(), params.noise_words))
      words.emplace_back(kNoise[n]);
    rng.shuffle(words);
    const auto age = 18 + rng.uniform_index(70);

    std::string profile = std::to_string(age) + "-year-old patient presents with ";
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) profile += (i + 1 == words.size()) ? " and " : ", ";
      profile += words[i];
    }
    profile += ".";

    StreamCase c;
    char id[32];
    std::snprintf(id, sizeof id, "case-%05zu", t + 1);
    c.patient = PatientCase{id, std::move(profile), gold};
    c.candidates = build_candidates(gold, out.pool, scorer,
                                    derive_seed(params.seed, t + 1, 0xCA4D), copts);
    out.cases.push_back(std::move(c));
    out.subtype.push_back(std::move(subtype));
  }
  return out;
}

}  // namespace dualmem
