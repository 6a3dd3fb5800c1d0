#ifndef PHRASE_PROBE_H
#define PHRASE_PROBE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PpStatus {
  PP_STATUS_OK = 0,
  PP_STATUS_NULL_POINTER = 1,
  PP_STATUS_INVALID_UTF8 = 2,
  PP_STATUS_IO = 3,
  PP_STATUS_SCHEMA = 4,
  PP_STATUS_INPUT = 5,
  PP_STATUS_SHAPE = 6,
  PP_STATUS_NUMERIC = 7,
  PP_STATUS_COVERAGE = 8,
  PP_STATUS_SAMPLING = 9,
  PP_STATUS_TRAINING = 10,
  PP_STATUS_NOT_FOUND = 11,
  /**
   * The quantity does not exist for these inputs (not a failure).
   */
  PP_STATUS_UNDEFINED = 12,
  PP_STATUS_BUFFER_TOO_SMALL = 13,
  PP_STATUS_PANIC = 14,
} PpStatus;

/**
 * An embedding dump loaded in memory.
 */
typedef struct PpDump PpDump;

/**
 * The seeded toy encoder.
 */
typedef struct PpEncoder PpEncoder;

/**
 * Per-(layer, rep) mean cosine between two dumps.
 */
typedef struct PpGrid PpGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *pp_last_error_message(void);

/**
 * # Safety
 * `u` and `v` point to `len` doubles; `out` is writable.
 */
enum PpStatus pp_cosine(const double *u, const double *v, size_t len, double *out);

/**
 * # Safety
 * `xs` and `ys` point to `len` doubles; `out` is writable.
 */
enum PpStatus pp_pearson(const double *xs, const double *ys, size_t len, double *out);

/**
 * # Safety
 * `xs` and `ys` point to `len` doubles; `out` is writable.
 */
enum PpStatus pp_spearman(const double *xs, const double *ys, size_t len, double *out);

/**
 * Word overlap of two whitespace-tokenized phrases.
 *
 * # Safety
 * `a` and `b` are NUL-terminated strings; `out` is writable.
 */
enum PpStatus pp_word_overlap(const char *a, const char *b, double *out);

/**
 * Returns `Undefined` (and leaves `out` untouched) when the sentences have
 * no first swapping word.
 *
 * # Safety
 * `s1` and `s2` are NUL-terminated strings; `out` is writable.
 */
enum PpStatus pp_first_swap_distance(const char *s1, const char *s2, size_t *out);

/**
 * # Safety
 * `s1` and `s2` are NUL-terminated strings; `out` is writable.
 */
enum PpStatus pp_relative_swap_distance(const char *s1, const char *s2, double *out);

/**
 * # Safety
 * `path` is a NUL-terminated string; `out` is writable. On success `*out`
 * must later be released with [`pp_dump_free`].
 */
enum PpStatus pp_dump_open(const char *path, struct PpDump **out);

/**
 * # Safety
 * `dump` is NULL or a handle from [`pp_dump_open`] not yet freed.
 */
void pp_dump_free(struct PpDump *dump);

/**
 * Vector dimension, or 0 for NULL.
 *
 * # Safety
 * `dump` is NULL or a live handle.
 */
size_t pp_dump_dim(const struct PpDump *dump);

/**
 * Encoder layers (layer 0 excluded), or 0 for NULL.
 *
 * # Safety
 * `dump` is NULL or a live handle.
 */
size_t pp_dump_num_layers(const struct PpDump *dump);

/**
 * Number of records, or 0 for NULL.
 *
 * # Safety
 * `dump` is NULL or a live handle.
 */
size_t pp_dump_len(const struct PpDump *dump);

/**
 * Copies one vector into `out`, which must hold at least the dump's dim.
 *
 * # Safety
 * `dump` is a live handle; the strings are NUL-terminated; `out` points to
 * `out_len` writable floats.
 */
enum PpStatus pp_dump_get_vector(const struct PpDump *dump,
                                 const char *item_id,
                                 const char *side,
                                 size_t layer,
                                 const char *rep,
                                 float *out,
                                 size_t out_len);

/**
 * # Safety
 * `a` and `b` are live dump handles; `out` is writable. On success `*out`
 * must later be released with [`pp_grid_free`].
 */
enum PpStatus pp_compare_dumps(const struct PpDump *a, const struct PpDump *b, struct PpGrid **out);

/**
 * Number of layer rows (layer 0 included), or 0 for NULL.
 *
 * # Safety
 * `grid` is NULL or a live handle.
 */
size_t pp_grid_layers(const struct PpGrid *grid);

/**
 * # Safety
 * `grid` is a live handle; `rep` is NUL-terminated; `out` is writable.
 */
enum PpStatus pp_grid_get(const struct PpGrid *grid, size_t layer, const char *rep, double *out);

/**
 * # Safety
 * `grid` is NULL or a handle from [`pp_compare_dumps`] not yet freed.
 */
void pp_grid_free(struct PpGrid *grid);

/**
 * Feed-forward width is four times `dim`; positions are enabled.
 *
 * # Safety
 * `out` is writable. On success `*out` must later be released with
 * [`pp_encoder_free`].
 */
enum PpStatus pp_encoder_new(size_t dim,
                             size_t layers,
                             size_t heads,
                             uint64_t seed,
                             struct PpEncoder **out);

/**
 * # Safety
 * `encoder` is NULL or a handle from [`pp_encoder_new`] not yet freed.
 */
void pp_encoder_free(struct PpEncoder *encoder);

/**
 * Encodes a phrase on its own and writes representation `rep` at `layer`
 * into `out`, which must hold at least `dim` doubles.
 *
 * # Safety
 * `encoder` is a live handle; `phrase` and `rep` are NUL-terminated; `out`
 * points to `out_len` writable doubles.
 */
enum PpStatus pp_encoder_encode_phrase(const struct PpEncoder *encoder,
                                       const char *phrase,
                                       size_t layer,
                                       const char *rep,
                                       double *out,
                                       size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHRASE_PROBE_H */
