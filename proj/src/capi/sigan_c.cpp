// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The sigan-el Authors
#include "sigan/sigan.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <new>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sigan/app/commands.hpp"
#include "sigan/models/checkpoint.hpp"
#include "sigan/train/config.hpp"

struct sigan_context {
  std::string last_error;
};

struct sigan_generator {
  std::unique_ptr<sigan::models::Generator<float>> net;
  sigan::models::CheckpointInfo info;
  std::string path;
};

namespace {

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
sigan_status guarded(sigan_context* ctx, Fn&& fn) {
  if (!ctx) return SIGAN_ERR_INVALID_ARGUMENT;
  try {
    fn();
    ctx->last_error.clear();
    return SIGAN_OK;
  } catch (const sigan::Error& e) {
    ctx->last_error = e.what();
    return static_cast<sigan_status>(static_cast<int>(e.code()));
  } catch (const nlohmann::json::exception& e) {
    ctx->last_error = std::string("malformed JSON: ") + e.what();
    return SIGAN_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    ctx->last_error = "out of memory";
    return SIGAN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    ctx->last_error = e.what();
    return SIGAN_ERR_INTERNAL;
  } catch (...) {
    ctx->last_error = "unknown failure";
    return SIGAN_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw sigan::Error(sigan::ErrorCode::kInvalidArgument, what);
}

}  // namespace

extern "C" {

const char* sigan_version(void) { return SIGAN_VERSION; }

const char* sigan_status_name(sigan_status status) {
  if (status == SIGAN_OK) return "ok";
  if (status < SIGAN_ERR_INVALID_ARGUMENT || status > SIGAN_ERR_INTERNAL) return "unknown";
  return sigan::error_code_name(static_cast<sigan::ErrorCode>(status)).data();
}

sigan_status sigan_context_create(sigan_context** out) {
  if (!out) return SIGAN_ERR_INVALID_ARGUMENT;
  static std::once_flag logger_once;
  std::call_once(logger_once, [] {
    auto logger = spdlog::stderr_color_mt("sigan");
    logger->set_level(spdlog::default_logger()->level());
    spdlog::set_default_logger(std::move(logger));
  });
  *out = new (std::nothrow) sigan_context();
  return *out ? SIGAN_OK : SIGAN_ERR_INTERNAL;
}

void sigan_context_destroy(sigan_context* ctx) { delete ctx; }

const char* sigan_last_error(const sigan_context* ctx) {
  return ctx ? ctx->last_error.c_str() : "null context";
}

sigan_status sigan_set_log_level(sigan_context* ctx, sigan_log_level level) {
  return guarded(ctx, [&] {
    switch (level) {
      case SIGAN_LOG_DEBUG: spdlog::set_level(spdlog::level::debug); break;
      case SIGAN_LOG_INFO: spdlog::set_level(spdlog::level::info); break;
      case SIGAN_LOG_WARN: spdlog::set_level(spdlog::level::warn); break;
      case SIGAN_LOG_ERROR: spdlog::set_level(spdlog::level::err); break;
      case SIGAN_LOG_OFF: spdlog::set_level(spdlog::level::off); break;
      default: require(false, "unknown log level");
    }
  });
}

sigan_status sigan_run(sigan_context* ctx, const char* command, const char* request_json,
                       char** result_json) {
  return guarded(ctx, [&] {
    require(command && request_json && result_json, "null argument to sigan_run");
    *result_json = nullptr;
    const auto request = sigan::app::Json::parse(request_json);
    const auto result = sigan::app::run_command(command, request);
    *result_json = dup_string(result.dump());
  });
}

sigan_status sigan_config_keys(sigan_context* ctx, char** keys_json) {
  return guarded(ctx, [&] {
    require(keys_json != nullptr, "null argument to sigan_config_keys");
    *keys_json = dup_string(sigan::app::Json(sigan::train::config_keys()).dump());
  });
}

void sigan_string_free(char* s) { std::free(s); }

sigan_status sigan_generator_load(sigan_context* ctx, const char* path, sigan_role role,
                                  sigan_generator** out) {
  return guarded(ctx, [&] {
    require(path && out, "null argument to sigan_generator_load");
    require(role == SIGAN_ROLE_G || role == SIGAN_ROLE_F, "unknown generator role");
    *out = nullptr;
    const auto r = role == SIGAN_ROLE_G ? sigan::models::GeneratorRole::kG
                                        : sigan::models::GeneratorRole::kF;
    auto gen = std::make_unique<sigan_generator>();
    const auto dir = sigan::models::resolve_generator_dir(path, r);
    gen->net = sigan::models::load_generator(dir, &gen->info);
    if (gen->net->role() != r) {
      throw sigan::RoleError("generator at " + dir.string() + " has role " +
                             std::string(sigan::models::role_name(gen->net->role())));
    }
    gen->path = dir.string();
    *out = gen.release();
  });
}

sigan_status sigan_generator_info(sigan_context* ctx, const sigan_generator* gen,
                                  char** info_json) {
  return guarded(ctx, [&] {
    require(gen && info_json, "null argument to sigan_generator_info");
    sigan::app::Json j{{"role", sigan::models::role_name(gen->net->role())},
                       {"path", gen->path},
                       {"training_step", gen->info.training_step},
                       {"weight_count", gen->net->weight_count()},
                       {"arch", sigan::models::arch_to_json(gen->net->arch())}};
    *info_json = dup_string(j.dump());
  });
}

sigan_status sigan_generator_forward(sigan_context* ctx, const sigan_generator* gen,
                                     const float* in, size_t n, size_t c, size_t h, size_t w,
                                     float* out) {
  return guarded(ctx, [&] {
    require(gen && in && out, "null argument to sigan_generator_forward");
    require(n > 0 && c > 0 && h > 0 && w > 0, "empty batch");
    const sigan::Shape shape{static_cast<int>(n), static_cast<int>(c), static_cast<int>(h),
                             static_cast<int>(w)};
    sigan::Tensor<float> x(shape, std::vector<float>(in, in + shape.numel()));
    const auto y = gen->net->infer(x);
    std::memcpy(out, y.data(), y.size() * sizeof(float));
  });
}

void sigan_generator_destroy(sigan_generator* gen) { delete gen; }

}  // extern "C"
