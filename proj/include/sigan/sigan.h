/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright (C) 2026 The sigan-el Authors */

/* Stable C interface to the sigan-el library. All handles are opaque; every
 * call returns a status code and records a message retrievable with
 * sigan_last_error(). Strings returned through char** out-parameters are
 * owned by the caller and released with sigan_string_free(). */
#ifndef SIGAN_SIGAN_H
#define SIGAN_SIGAN_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(SIGAN_BUILDING_LIBRARY)
#    define SIGAN_API __declspec(dllexport)
#  else
#    define SIGAN_API __declspec(dllimport)
#  endif
#else
#  define SIGAN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sigan_status {
  SIGAN_OK = 0,
  SIGAN_ERR_INVALID_ARGUMENT = 1,
  SIGAN_ERR_CONFIG = 2,
  SIGAN_ERR_DATASET_LAYOUT = 3,
  SIGAN_ERR_IO = 4,
  SIGAN_ERR_SHAPE = 5,
  SIGAN_ERR_ROLE = 6,
  SIGAN_ERR_NUMERIC = 7,
  SIGAN_ERR_INTERNAL = 8
} sigan_status;

typedef enum sigan_log_level {
  SIGAN_LOG_DEBUG = 0,
  SIGAN_LOG_INFO = 1,
  SIGAN_LOG_WARN = 2,
  SIGAN_LOG_ERROR = 3,
  SIGAN_LOG_OFF = 4
} sigan_log_level;

typedef enum sigan_role { SIGAN_ROLE_G = 0, SIGAN_ROLE_F = 1 } sigan_role;

typedef struct sigan_context sigan_context;
typedef struct sigan_generator sigan_generator;

SIGAN_API const char* sigan_version(void);
/* "ok", "invalid_argument", "config", ... */
SIGAN_API const char* sigan_status_name(sigan_status status);

SIGAN_API sigan_status sigan_context_create(sigan_context** out);
SIGAN_API void sigan_context_destroy(sigan_context* ctx);
/* Message of the most recent failed call on `ctx`; "" after a success. */
SIGAN_API const char* sigan_last_error(const sigan_context* ctx);
SIGAN_API sigan_status sigan_set_log_level(sigan_context* ctx, sigan_log_level level);

/* Runs a command ("train", "segment", "augment", "evaluate-fid",
 * "evaluate-seg") described by a JSON object; the result is JSON. */
SIGAN_API sigan_status sigan_run(sigan_context* ctx, const char* command, const char* request_json,
                                 char** result_json);
/* JSON array of the training configuration keys. */
SIGAN_API sigan_status sigan_config_keys(sigan_context* ctx, char** keys_json);
SIGAN_API void sigan_string_free(char* s);

/* `path` may name a generator directory, a training checkpoint, or a run. */
SIGAN_API sigan_status sigan_generator_load(sigan_context* ctx, const char* path, sigan_role role,
                                            sigan_generator** out);
/* JSON with role, architecture and training step. */
SIGAN_API sigan_status sigan_generator_info(sigan_context* ctx, const sigan_generator* gen,
                                            char** info_json);
/* Inference on an n x c x h x w float batch in [-1, 1]; `out` has the same size. */
SIGAN_API sigan_status sigan_generator_forward(sigan_context* ctx, const sigan_generator* gen,
                                               const float* in, size_t n, size_t c, size_t h,
                                               size_t w, float* out);
SIGAN_API void sigan_generator_destroy(sigan_generator* gen);

#ifdef __cplusplus
}
#endif

#endif /* SIGAN_SIGAN_H */
