/* C interface for the tfs hand-sign recognizer. */

#ifndef TFS_H
#define TFS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a fallible call.
typedef enum TfsStatus {
  // Success; out-parameters are populated.
  TFS_STATUS_OK = 0,
  // A required pointer argument was NULL.
  TFS_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  TFS_STATUS_INVALID_UTF8 = 2,
  // Input text could not be parsed as a frame record.
  TFS_STATUS_PARSE_ERROR = 3,
  // A file could not be read.
  TFS_STATUS_IO_ERROR = 4,
  // Model JSON was rejected.
  TFS_STATUS_INVALID_MODEL = 5,
  // Keypoint-map JSON was rejected.
  TFS_STATUS_INVALID_MAP = 6,
  // An internal invariant failed; the call had no effect.
  TFS_STATUS_INTERNAL_ERROR = 7,
} TfsStatus;

// Opaque landmark-to-sign map handle.
typedef struct TfsKeypointMap TfsKeypointMap;

// Opaque trained classifier handle.
typedef struct TfsModel TfsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string; never freed.
const char *tfs_version(void);

// Loads a trained model from a JSON file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer; on
// `TFS_STATUS_OK` the caller owns the handle and must pass it to
// [`tfs_model_free`].
enum TfsStatus tfs_model_load_path(const char *path, struct TfsModel **out);

// Parses a trained model from in-memory JSON.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer; on
// `TFS_STATUS_OK` the caller owns the handle and must pass it to
// [`tfs_model_free`].
enum TfsStatus tfs_model_from_json(const char *json, struct TfsModel **out);

// Number of classes the model distinguishes, or -1 for NULL.
//
// # Safety
// `model` must be NULL or a live handle from a `tfs_model_*` constructor.
int tfs_model_num_classes(const struct TfsModel *model);

// Length of the model's input feature vector, or -1 for NULL.
//
// # Safety
// `model` must be NULL or a live handle from a `tfs_model_*` constructor.
int tfs_model_input_dim(const struct TfsModel *model);

// Feature encoding of the model: 0 absolute, 1 wrist-relative, -1 NULL.
//
// # Safety
// `model` must be NULL or a live handle from a `tfs_model_*` constructor.
int tfs_model_encoding(const struct TfsModel *model);

// Releases a model handle; NULL is a no-op.
//
// # Safety
// `model` must be NULL or a handle not freed before.
void tfs_model_free(struct TfsModel *model);

// Creates the built-in landmark-to-sign map.
//
// # Safety
// `out` must be a valid pointer; the caller owns the handle and must pass
// it to [`tfs_map_free`].
enum TfsStatus tfs_map_default(struct TfsKeypointMap **out);

// Loads a landmark-to-sign map from a JSON file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer; on
// `TFS_STATUS_OK` the caller owns the handle and must pass it to
// [`tfs_map_free`].
enum TfsStatus tfs_map_load_path(const char *path, struct TfsKeypointMap **out);

// Parses a landmark-to-sign map from in-memory JSON.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer; on
// `TFS_STATUS_OK` the caller owns the handle and must pass it to
// [`tfs_map_free`].
enum TfsStatus tfs_map_from_json(const char *json, struct TfsKeypointMap **out);

// Releases a map handle; NULL is a no-op.
//
// # Safety
// `map` must be NULL or a handle not freed before.
void tfs_map_free(struct TfsKeypointMap *map);

// Classifies one frame given as a JSON frame record and returns the
// prediction as JSON through `out_json`.
//
// Set `y_down` to nonzero when the frame uses image coordinates (y grows
// downward); the frame is flipped into the canonical y-up system before
// classification. The returned string must be freed with
// [`tfs_string_free`].
//
// # Safety
// `model` and `map` must be live handles, `frame_json` a NUL-terminated
// string and `out_json` a valid pointer.
enum TfsStatus tfs_recognize_frame_json(const struct TfsModel *model,
                                        const struct TfsKeypointMap *map,
                                        const char *frame_json,
                                        int y_down,
                                        char **out_json);

// Frees a string returned by this library; NULL is a no-op.
//
// # Safety
// `s` must be NULL or a string produced by this library and not freed
// before.
void tfs_string_free(char *s);

// Open-palm test on 63 doubles (21 landmarks, y up): 1 open, 0 not,
// -1 for NULL or non-finite input.
//
// # Safety
// `landmarks` must be NULL or point at 63 readable doubles.
int tfs_is_open_palm(const double *landmarks);

// Pointing-hand test on 63 doubles (21 landmarks, y up): 1 pointing,
// 0 not, -1 for NULL or non-finite input.
//
// # Safety
// `landmarks` must be NULL or point at 63 readable doubles.
int tfs_is_pointing(const double *landmarks);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TFS_H */
