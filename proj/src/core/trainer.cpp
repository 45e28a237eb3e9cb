// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <type_traits>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sigan/models/checkpoint.hpp"

namespace fs = std::filesystem;

namespace sigan::train {

using losses::LossReport;
using models::Json;

ObjectiveWeights ObjectiveWeights::from(const losses::LossWeights& w) {
  w.validate();
  return {1.0, 1.0, w.lambda1, w.lambda1, w.lambda2};
}

namespace {

template <typename T>
void axpy(Tensor<T>& dst, double alpha, const Tensor<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += static_cast<T>(alpha * src[i]);
}

/// Adds alpha * d(l1(x, y))/dx to gx and alpha * d/dy to gy; returns the distance.
template <typename T>
double l1_term(const Tensor<T>& x, const Tensor<T>& y, double alpha, losses::Reduction red,
               std::type_identity_t<Tensor<T>>* gx, Tensor<T>* gy) {
  Tensor<T> dx, dy;
  const double v = losses::l1_distance(x, y, red, gx ? &dx : nullptr, gy ? &dy : nullptr);
  if (gx) axpy(*gx, alpha, dx);
  if (gy) axpy(*gy, alpha, dy);
  return v;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
  return out;
}

}  // namespace

template <typename T>
LossReport generator_objective(models::ModelSet<T>& m, const Tensor<T>& a, const Tensor<T>& b,
                               const ObjectiveOptions& opt, Translations<T>* out) {
  const ObjectiveWeights& w = opt.weights;
  const auto red = opt.reduction;
  const bool need_si = w.si_g != 0 || w.si_f != 0;
  const bool need_rec = need_si || w.cyc != 0;

  typename models::Generator<T>::Tape tg1, tf1, tg2, tf2;
  Tensor<T> fake_b = m.g->forward(a, &tg1);
  Tensor<T> fake_a = m.f->forward(b, &tf1);
  Tensor<T> rec_a, rec_b;
  if (need_rec) {
    rec_a = m.f->forward(fake_b, &tf2);
    rec_b = m.g->forward(fake_a, &tg2);
  }

  Tensor<T> d_fake_b(fake_b.shape()), d_fake_a(fake_a.shape());
  Tensor<T> d_rec_a(fake_b.shape()), d_rec_b(fake_a.shape());
  LossReport r;

  if (w.adv_g != 0) {
    typename models::Discriminator<T>::Tape td;
    const Tensor<T> logits = m.d_b->forward(fake_b, &td);
    Tensor<T> dl;
    r.adv_g = losses::generator_adversarial_loss(logits, opt.adversarial_mode, &dl);
    for (auto& v : dl.vec()) v = static_cast<T>(w.adv_g * v);
    add_inplace(d_fake_b, m.d_b->backward(td, dl, false));
  }
  if (w.adv_f != 0) {
    typename models::Discriminator<T>::Tape td;
    const Tensor<T> logits = m.d_a->forward(fake_a, &td);
    Tensor<T> dl;
    r.adv_f = losses::generator_adversarial_loss(logits, opt.adversarial_mode, &dl);
    for (auto& v : dl.vec()) v = static_cast<T>(w.adv_f * v);
    add_inplace(d_fake_a, m.d_a->backward(td, dl, false));
  }
  if (w.si_g != 0) {
    r.si_g = l1_term(a, fake_b, w.si_g, red, nullptr, &d_fake_b) +
             l1_term(fake_a, rec_b, w.si_g, red, &d_fake_a, &d_rec_b);
  }
  if (w.si_f != 0) {
    r.si_f = l1_term(b, fake_a, w.si_f, red, nullptr, &d_fake_a) +
             l1_term(fake_b, rec_a, w.si_f, red, &d_fake_b, &d_rec_a);
  }
  if (w.cyc != 0) {
    r.cyc = l1_term(a, rec_a, w.cyc, red, nullptr, &d_rec_a) +
            l1_term(b, rec_b, w.cyc, red, nullptr, &d_rec_b);
  }
  r.total_generators =
      w.adv_g * r.adv_g + w.adv_f * r.adv_f + w.si_g * r.si_g + w.si_f * r.si_f + w.cyc * r.cyc;

  if (need_rec) {
    add_inplace(d_fake_b, m.f->backward(tf2, d_rec_a, true));
    add_inplace(d_fake_a, m.g->backward(tg2, d_rec_b, true));
  }
  m.g->backward(tg1, d_fake_b, true);
  m.f->backward(tf1, d_fake_a, true);

  if (out) {
    out->fake_b = std::move(fake_b);
    out->fake_a = std::move(fake_a);
    out->rec_a = std::move(rec_a);
    out->rec_b = std::move(rec_b);
  }
  return r;
}

template <typename T>
void discriminator_objective(models::ModelSet<T>& m, const Tensor<T>& a, const Tensor<T>& b,
                             const Tensor<T>& fake_a, const Tensor<T>& fake_b,
                             losses::AdversarialMode mode, LossReport& report) {
  auto one = [mode](models::Discriminator<T>& d, const Tensor<T>& real, const Tensor<T>& fake) {
    typename models::Discriminator<T>::Tape tr, tf;
    const Tensor<T> lr = d.forward(real, &tr);
    const Tensor<T> lf = d.forward(fake, &tf);
    Tensor<T> dr, df;
    const double loss = losses::discriminator_loss(lr, lf, mode, &dr, &df);
    d.backward(tr, dr, true);
    d.backward(tf, df, true);
    return loss;
  };
  report.adv_da = one(*m.d_a, a, fake_a);
  report.adv_db = one(*m.d_b, b, fake_b);
}

template LossReport generator_objective<float>(models::ModelSet<float>&, const Tensor<float>&,
                                               const Tensor<float>&, const ObjectiveOptions&,
                                               Translations<float>*);
template LossReport generator_objective<double>(models::ModelSet<double>&, const Tensor<double>&,
                                                const Tensor<double>&, const ObjectiveOptions&,
                                                Translations<double>*);
template void discriminator_objective<float>(models::ModelSet<float>&, const Tensor<float>&,
                                             const Tensor<float>&, const Tensor<float>&,
                                             const Tensor<float>&, losses::AdversarialMode,
                                             LossReport&);
template void discriminator_objective<double>(models::ModelSet<double>&, const Tensor<double>&,
                                              const Tensor<double>&, const Tensor<double>&,
                                              const Tensor<double>&, losses::AdversarialMode,
                                              LossReport&);

// ---------------------------------------------------------------------------
// Image pool

Tensor<float> ImagePool::query(const Tensor<float>& images, std::mt19937_64& rng) {
  if (capacity_ == 0) return images;
  const Shape& s = images.shape();
  Tensor<float> out(s);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int n = 0; n < s.n; ++n) {
    Tensor<float> img({1, s.c, s.h, s.w});
    std::copy(images.sample(n), images.sample(n) + s.sample(), img.data());
    const float* src = img.data();
    Tensor<float> swapped;
    if (static_cast<int>(images_.size()) < capacity_) {
      images_.push_back(img);
    } else if (coin(rng) > 0.5) {
      std::uniform_int_distribution<std::size_t> pick(0, images_.size() - 1);
      const std::size_t k = pick(rng);
      swapped = std::move(images_[k]);
      images_[k] = img;
      src = swapped.data();
    }
    std::copy(src, src + s.sample(), out.sample(n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// State

namespace {

nn::ParamList<float> joint(nn::ParamList<float> x, const nn::ParamList<float>& y) {
  x.insert(x.end(), y.begin(), y.end());
  return x;
}

void check_params_finite(const nn::ParamList<float>& params, const std::string& who,
                         const data::BatchPair& batch, std::int64_t step) {
  for (const auto* p : params) {
    if (!p->value.all_finite()) {
      throw NumericError(fmt::format(
          "{} parameter '{}' became non-finite at step {}; batch A ids: [{}]; batch B ids: [{}]",
          who, p->name, step, join_ids(batch.ids_a), join_ids(batch.ids_b)));
    }
  }
}

void build_optimizers(TrainState& s) {
  s.opt_gen = nn::Adam<float>(joint(s.models.g->parameters(), s.models.f->parameters()),
                              s.cfg.optimizer);
  s.opt_disc = nn::Adam<float>(joint(s.models.d_a->parameters(), s.models.d_b->parameters()),
                               s.cfg.optimizer);
}

std::mt19937_64 pool_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x706f6f6cu};
  return std::mt19937_64(seq);
}

}  // namespace

TrainState make_train_state(const TrainConfig& cfg) {
  cfg.validate();
  TrainState s{cfg,
               models::init_params<float>(cfg.generator_arch(), cfg.discriminator_arch(), cfg.seed),
               {},
               {},
               ImagePool(cfg.pool_size),
               ImagePool(cfg.pool_size),
               pool_rng(cfg.seed),
               0,
               0,
               {}};
  build_optimizers(s);
  return s;
}

Tensor<float> replicate_channels(const Tensor<float>& t, int channels) {
  const Shape& s = t.shape();
  if (s.c == channels) return t;
  if (s.c != 1) {
    throw ShapeError("cannot expand " + std::to_string(s.c) + " channels to " +
                     std::to_string(channels));
  }
  Tensor<float> out({s.n, channels, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < channels; ++c) {
      std::copy(t.sample(n), t.sample(n) + s.plane(), out.sample(n) + c * s.plane());
    }
  }
  return out;
}

LossReport train_step(TrainState& state, const data::BatchPair& batch, double lr) {
  const TrainConfig& cfg = state.cfg;
  const Tensor<float> a = replicate_channels(batch.batch_a, cfg.channels);
  const Tensor<float> b = replicate_channels(batch.batch_b, cfg.channels);
  ObjectiveOptions opt{ObjectiveWeights::from(cfg.loss_weights), cfg.adversarial_mode,
                       cfg.l1_reduction};
  LossReport report;
  Tensor<float> fake_a, fake_b;

  auto update_generators = [&] {
    state.opt_gen.zero_grad();
    Translations<float> tr;
    const LossReport g = generator_objective(state.models, a, b, opt, &tr);
    report.adv_g = g.adv_g;
    report.adv_f = g.adv_f;
    report.si_g = g.si_g;
    report.si_f = g.si_f;
    report.cyc = g.cyc;
    report.total_generators = g.total_generators;
    if (!g.all_finite()) {
      throw NumericError(fmt::format("non-finite generator loss at step {}: {}; batch A ids: [{}]; "
                                     "batch B ids: [{}]",
                                     state.step, g.to_json(), join_ids(batch.ids_a),
                                     join_ids(batch.ids_b)));
    }
    if (cfg.grad_clip > 0) state.opt_gen.clip_grad_norm(cfg.grad_clip);
    state.opt_gen.step(lr);
    fake_a = std::move(tr.fake_a);
    fake_b = std::move(tr.fake_b);
  };
  auto update_discriminators = [&] {
    if (fake_a.empty()) {
      typename models::Generator<float>::Tape scratch;
      fake_b = state.models.g->forward(a, &scratch);
      fake_a = state.models.f->forward(b, &scratch);
    }
    const Tensor<float> pa = state.pool_a.query(fake_a, state.rng);
    const Tensor<float> pb = state.pool_b.query(fake_b, state.rng);
    state.opt_disc.zero_grad();
    discriminator_objective(state.models, a, b, pa, pb, cfg.adversarial_mode, report);
    if (!std::isfinite(report.adv_da) || !std::isfinite(report.adv_db)) {
      throw NumericError(fmt::format("non-finite discriminator loss at step {}; batch A ids: [{}]; "
                                     "batch B ids: [{}]",
                                     state.step, join_ids(batch.ids_a), join_ids(batch.ids_b)));
    }
    if (cfg.grad_clip > 0) state.opt_disc.clip_grad_norm(cfg.grad_clip);
    state.opt_disc.step(lr);
  };

  try {
    if (cfg.update_order == UpdateOrder::kGeneratorsFirst) {
      update_generators();
      update_discriminators();
    } else {
      update_discriminators();
      update_generators();
    }
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    if (msg.find("batch A ids") != std::string::npos) throw;
    throw NumericError(fmt::format("{} at step {}; batch A ids: [{}]; batch B ids: [{}]", msg,
                                   state.step, join_ids(batch.ids_a), join_ids(batch.ids_b)));
  }
  check_params_finite(state.opt_gen.params(), "generator", batch, state.step);
  check_params_finite(state.opt_disc.params(), "discriminator", batch, state.step);
  ++state.step;
  return report;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr const char* kStateFile = "train_state.json";

Json record_to_json(const StepRecord& r) {
  Json j{{"epoch", r.epoch}, {"step", r.step}, {"lr", r.lr}};
  const auto l = Json::parse(r.losses.to_json());
  for (const auto& [k, v] : l.items()) j[k] = v;
  return j;
}

StepRecord record_from_json(const Json& j) {
  StepRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.step = j.at("step").get<std::int64_t>();
  r.lr = j.at("lr").get<double>();
  r.losses.adv_g = j.at("adv_g").get<double>();
  r.losses.adv_f = j.at("adv_f").get<double>();
  r.losses.adv_da = j.at("adv_da").get<double>();
  r.losses.adv_db = j.at("adv_db").get<double>();
  r.losses.cyc = j.at("cyc").get<double>();
  r.losses.si_g = j.at("si_g").get<double>();
  r.losses.si_f = j.at("si_f").get<double>();
  r.losses.total_generators = j.at("total_generators").get<double>();
  return r;
}

void save_optimizer(const nn::Adam<float>& opt, const fs::path& dir) {
  models::NamedTensors tensors;
  const auto& params = opt.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->trainable) continue;
    tensors.emplace_back(fmt::format("m/{}/{}", i, params[i]->name), &opt.first_moments()[i]);
    tensors.emplace_back(fmt::format("v/{}/{}", i, params[i]->name), &opt.second_moments()[i]);
  }
  models::write_tensor_dir(dir, Json{{"kind", "optimizer"}, {"steps", opt.steps()}}, tensors);
}

void load_optimizer(nn::Adam<float>& opt, const fs::path& dir) {
  auto td = models::read_tensor_dir(dir);
  const auto& params = opt.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->trainable) continue;
    for (const char* which : {"m", "v"}) {
      const std::string name = fmt::format("{}/{}/{}", which, i, params[i]->name);
      auto it = td.tensors.find(name);
      if (it == td.tensors.end() || it->second.shape() != params[i]->value.shape()) {
        throw IoError("optimizer state " + dir.string() + ": missing or mis-shaped '" + name + "'");
      }
      (which[0] == 'm' ? opt.first_moments() : opt.second_moments())[i] = it->second;
    }
  }
  opt.set_steps(td.metadata.at("steps").get<std::int64_t>());
}

void save_pool(const ImagePool& pool, const fs::path& dir) {
  models::NamedTensors tensors;
  for (std::size_t i = 0; i < pool.images().size(); ++i) {
    tensors.emplace_back(fmt::format("image{:06d}", i), &pool.images()[i]);
  }
  models::write_tensor_dir(dir, Json{{"kind", "image_pool"}, {"capacity", pool.capacity()}},
                           tensors);
}

void load_pool(ImagePool& pool, const fs::path& dir) {
  auto td = models::read_tensor_dir(dir);
  pool.images().clear();
  for (auto& [name, t] : td.tensors) pool.images().push_back(std::move(t));
}

void write_text_atomic(const fs::path& file, const std::string& text) {
  const fs::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, file);
}

}  // namespace

void save_train_state(const TrainState& s, const fs::path& dir) {
  const models::CheckpointInfo info{s.step, s.cfg.to_json()};
  models::save_generator(*s.models.g, dir / "G", info);
  models::save_generator(*s.models.f, dir / "F", info);
  models::save_discriminator(*s.models.d_a, dir / "D_a", info);
  models::save_discriminator(*s.models.d_b, dir / "D_b", info);
  save_optimizer(s.opt_gen, dir / "optimizer_gen");
  save_optimizer(s.opt_disc, dir / "optimizer_disc");
  save_pool(s.pool_a, dir / "pool_a");
  save_pool(s.pool_b, dir / "pool_b");
  std::ostringstream rng;
  rng << s.rng;
  Json history = Json::array();
  for (const auto& r : s.history) history.push_back(record_to_json(r));
  const Json j{{"format_version", models::kCheckpointFormatVersion},
               {"epoch", s.epoch},
               {"step", s.step},
               {"rng", rng.str()},
               {"config", s.cfg.to_json()},
               {"history", std::move(history)}};
  write_text_atomic(dir / kStateFile, j.dump(1) + "\n");
}

TrainState load_train_state(const fs::path& dir) {
  std::ifstream in(dir / kStateFile);
  if (!in) throw IoError("no training state at " + dir.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed " + (dir / kStateFile).string() + ": " + e.what());
  }
  TrainState s;
  s.cfg = config_from_json(j.at("config"));
  s.cfg.validate();
  s.models.g = models::load_generator(dir / "G");
  s.models.f = models::load_generator(dir / "F");
  s.models.d_a = models::load_discriminator(dir / "D_a");
  s.models.d_b = models::load_discriminator(dir / "D_b");
  build_optimizers(s);
  load_optimizer(s.opt_gen, dir / "optimizer_gen");
  load_optimizer(s.opt_disc, dir / "optimizer_disc");
  s.pool_a = ImagePool(s.cfg.pool_size);
  s.pool_b = ImagePool(s.cfg.pool_size);
  load_pool(s.pool_a, dir / "pool_a");
  load_pool(s.pool_b, dir / "pool_b");
  std::istringstream rng(j.at("rng").get<std::string>());
  rng >> s.rng;
  s.epoch = j.at("epoch").get<int>();
  s.step = j.at("step").get<std::int64_t>();
  for (const auto& r : j.at("history")) s.history.push_back(record_from_json(r));
  return s;
}

fs::path latest_checkpoint(const fs::path& out_dir) {
  const fs::path pointer = out_dir / "checkpoints" / "latest";
  if (!fs::exists(pointer)) return {};
  std::ifstream in(pointer);
  std::string name;
  std::getline(in, name);
  const fs::path dir = out_dir / "checkpoints" / name;
  return fs::exists(dir / kStateFile) ? dir : fs::path{};
}

// ---------------------------------------------------------------------------
// Loop

std::pair<std::vector<data::ImageSample>, std::vector<data::ImageSample>> training_domains(
    const data::DomainCollection& collection, const TrainConfig& cfg) {
  std::vector<data::ImageSample> a = collection.defect_free;
  std::vector<data::ImageSample> b;
  for (const auto* s : collection.defective_of(cfg.defect_class)) b.push_back(*s);
  if (cfg.offline_augment) b = data::augment_offline(b);
  for (const auto* list : {&a, &b}) {
    for (const auto& s : *list) {
      if (s.pixels.height != cfg.image_size || s.pixels.width != cfg.image_size) {
        throw ConfigError(fmt::format("sample {} is {}x{} but image_size is {}", s.id,
                                      s.pixels.height, s.pixels.width, cfg.image_size));
      }
    }
  }
  return {std::move(a), std::move(b)};
}

TrainResult train(const TrainConfig& cfg, const data::DomainCollection& collection,
                  const fs::path& out_dir, const TrainOptions& opts) {
  cfg.validate();
  auto [dom_a, dom_b] = training_domains(collection, cfg);
  std::vector<const data::ImageSample*> pa, pb;
  for (const auto& s : dom_a) pa.push_back(&s);
  for (const auto& s : dom_b) pb.push_back(&s);
  const data::UnpairedSampler sampler(pa, pb, cfg.batch_size, cfg.seed);
  const std::int64_t per_epoch = sampler.steps_per_epoch();

  std::error_code ec;
  fs::create_directories(out_dir / "checkpoints", ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  TrainState state;
  const fs::path resume_from = opts.resume ? latest_checkpoint(out_dir) : fs::path{};
  if (!resume_from.empty()) {
    state = load_train_state(resume_from);
    if (to_config_map(state.cfg) != to_config_map(cfg)) {
      std::string diff;
      const auto saved = to_config_map(state.cfg);
      for (const auto& [k, v] : to_config_map(cfg)) {
        if (saved.at(k) != v) diff += fmt::format(" {}: {} -> {}", k, saved.at(k), v);
      }
      throw ConfigError("cannot resume " + resume_from.string() + " with a different config:" + diff);
    }
    spdlog::info("resuming from {} at epoch {}, step {}", resume_from.string(), state.epoch,
                 state.step);
  } else {
    state = make_train_state(cfg);
  }

  TrainResult result;
  result.log_file = out_dir / "train_log.jsonl";
  std::ofstream log(result.log_file, std::ios::trunc);
  if (!log) throw IoError("cannot write " + result.log_file.string());
  for (const auto& r : state.history) log << record_to_json(r).dump() << '\n';
  log.flush();

  spdlog::info("training {} epochs of {} steps (A: {}, B: {} {})", cfg.total_epochs(), per_epoch,
               dom_a.size(), dom_b.size(), data::class_name(cfg.defect_class));
  std::int64_t taken = 0;
  bool stopped = false;
  for (int epoch = state.epoch; epoch < cfg.total_epochs() && !stopped; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = lr_schedule(epoch, cfg);
    for (std::int64_t i = state.step - epoch * per_epoch; i < per_epoch; ++i) {
      if (opts.max_steps >= 0 && taken >= opts.max_steps) {
        stopped = true;
        break;
      }
      const std::int64_t global = epoch * per_epoch + i;
      const data::BatchPair batch = sampler.batch(global);
      StepRecord rec{epoch, global, lr, train_step(state, batch, lr)};
      state.history.push_back(rec);
      log << record_to_json(rec).dump() << '\n';
      log.flush();
      if (opts.on_step) opts.on_step(rec);
      ++taken;
    }
    if (stopped) break;
    state.epoch = epoch + 1;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& last = state.history.back().losses;
    spdlog::info("epoch {}/{} lr={:.6g} cyc={:.4f} adv_g={:.4f} adv_db={:.4f} ({:.1f}s)",
                 state.epoch, cfg.total_epochs(), lr, last.cyc, last.adv_g, last.adv_db, secs);
    const bool periodic = cfg.checkpoint_every > 0 && state.epoch % cfg.checkpoint_every == 0;
    if (periodic || state.epoch == cfg.total_epochs()) {
      const std::string name = fmt::format("epoch_{:04d}", state.epoch);
      const fs::path final_dir = out_dir / "checkpoints" / name;
      const fs::path partial = out_dir / "checkpoints" / (name + ".partial");
      fs::remove_all(partial);
      save_train_state(state, partial);
      fs::remove_all(final_dir);
      fs::rename(partial, final_dir);
      write_text_atomic(out_dir / "checkpoints" / "latest", name + "\n");
      result.checkpoints.push_back(final_dir);
    }
  }
  result.epochs_completed = state.epoch;
  result.steps = state.step;
  result.history = std::move(state.history);
  return result;
}

}  // namespace sigan::train
