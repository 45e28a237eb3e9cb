// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "sigan/data/dataset.hpp"
#include "sigan/losses.hpp"
#include "sigan/models/networks.hpp"
#include "sigan/nn/adam.hpp"
#include "sigan/train/config.hpp"

namespace sigan::train {

/// Per-term coefficients of the generator objective. A zero coefficient
/// skips the term entirely; it is then reported as exactly 0.
struct ObjectiveWeights {
  double adv_g = 1.0;
  double adv_f = 1.0;
  double si_g = 10.0;
  double si_f = 10.0;
  double cyc = 5.0;

  static ObjectiveWeights from(const losses::LossWeights& w);
};

struct ObjectiveOptions {
  ObjectiveWeights weights;
  losses::AdversarialMode adversarial_mode = losses::AdversarialMode::kLog;
  losses::Reduction reduction = losses::Reduction::kMean;
};

template <typename T>
struct Translations {
  Tensor<T> fake_b;  ///< G(a)
  Tensor<T> fake_a;  ///< F(b)
  Tensor<T> rec_a;   ///< F(G(a)), empty when not needed
  Tensor<T> rec_b;   ///< G(F(b)), empty when not needed
};

/// Runs both generators on (a, b), evaluates the weighted generator objective
/// and accumulates its gradient into the parameters of G and F. The
/// discriminators are traversed for the adversarial gradient but their own
/// parameter gradients are left alone.
template <typename T>
losses::LossReport generator_objective(models::ModelSet<T>& m, const Tensor<T>& a,
                                       const Tensor<T>& b, const ObjectiveOptions& opt,
                                       Translations<T>* out = nullptr);

/// D_a on (a, fake_a) and D_b on (b, fake_b); accumulates into D_a and D_b.
/// Fills adv_da and adv_db of `report`.
template <typename T>
void discriminator_objective(models::ModelSet<T>& m, const Tensor<T>& a, const Tensor<T>& b,
                             const Tensor<T>& fake_a, const Tensor<T>& fake_b,
                             losses::AdversarialMode mode, losses::LossReport& report);

/// History of generated batches; with probability 1/2 a query swaps an
/// incoming image for a stored one once the pool is full.
class ImagePool {
 public:
  explicit ImagePool(int capacity = 0) : capacity_(capacity) {}

  Tensor<float> query(const Tensor<float>& images, std::mt19937_64& rng);
  int capacity() const { return capacity_; }
  std::vector<Tensor<float>>& images() { return images_; }
  const std::vector<Tensor<float>>& images() const { return images_; }

 private:
  int capacity_;
  std::vector<Tensor<float>> images_;  // each 1 x C x H x W
};

struct StepRecord {
  int epoch = 0;
  std::int64_t step = 0;
  double lr = 0;
  losses::LossReport losses;
};

struct TrainState {
  TrainConfig cfg;
  models::ModelSet<float> models;
  nn::Adam<float> opt_gen;   ///< G and F jointly
  nn::Adam<float> opt_disc;  ///< D_a and D_b jointly
  ImagePool pool_a;
  ImagePool pool_b;
  std::mt19937_64 rng;  ///< drives the image pools only
  /// Epochs fully completed; training resumes at this epoch.
  int epoch = 0;
  /// Optimizer steps taken so far.
  std::int64_t step = 0;
  std::vector<StepRecord> history;
};

TrainState make_train_state(const TrainConfig& cfg);

/// One alternating update on `batch` at learning rate `lr`.
losses::LossReport train_step(TrainState& state, const data::BatchPair& batch, double lr);

/// Writes G, F, D_a, D_b, both optimizers, pools and counters into `dir`.
void save_train_state(const TrainState& state, const std::filesystem::path& dir);
TrainState load_train_state(const std::filesystem::path& dir);

struct TrainOptions {
  bool resume = false;
  /// Stops after this many optimizer steps in this call (negative: no limit).
  std::int64_t max_steps = -1;
  std::function<void(const StepRecord&)> on_step;
};

struct TrainResult {
  int epochs_completed = 0;
  std::int64_t steps = 0;
  std::vector<std::filesystem::path> checkpoints;
  std::filesystem::path log_file;
  std::vector<StepRecord> history;
};

/// Training domains: defect-free images as A, the configured defect class
/// (with optional offline augmentation) as B.
std::pair<std::vector<data::ImageSample>, std::vector<data::ImageSample>> training_domains(
    const data::DomainCollection& collection, const TrainConfig& cfg);

/// Runs the full schedule. Checkpoints land in `<out>/checkpoints/epoch_NNNN`
/// with `<out>/checkpoints/latest` naming the newest; the step log is
/// `<out>/train_log.jsonl`.
TrainResult train(const TrainConfig& cfg, const data::DomainCollection& collection,
                  const std::filesystem::path& out_dir, const TrainOptions& opts = {});

/// Latest complete checkpoint under a run directory, or empty.
std::filesystem::path latest_checkpoint(const std::filesystem::path& out_dir);

/// Repeats a single-channel batch along the channel axis.
Tensor<float> replicate_channels(const Tensor<float>& t, int channels);

}  // namespace sigan::train
