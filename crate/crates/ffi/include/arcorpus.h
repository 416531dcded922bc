#ifndef ARCORPUS_H
#define ARCORPUS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ArcStatus {
  ARC_STATUS_OK = 0,
  ARC_STATUS_NULL_POINTER = 1,
  ARC_STATUS_INVALID_UTF8 = 2,
  ARC_STATUS_INVALID_ARGUMENT = 3,
  ARC_STATUS_IO = 4,
  ARC_STATUS_PARSE = 5,
  ARC_STATUS_UNKNOWN_TOKEN = 6,
  ARC_STATUS_ZERO_VARIANCE = 7,
  ARC_STATUS_LENGTH_MISMATCH = 8,
  ARC_STATUS_PANIC = 99,
} ArcStatus;

/**
 * Opaque streaming filter. Documents are deduplicated against every
 * sentence kept earlier by the same handle.
 */
typedef struct ArcFilter ArcFilter;

/**
 * Opaque byte-level BPE vocabulary.
 */
typedef struct ArcVocab ArcVocab;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into this library from the same thread.
 */
const char *arc_last_error(void);

/**
 * # Safety
 * `s` must come from this library or be NULL.
 */
void arc_string_free(char *s);

/**
 * # Safety
 * `ids` and `len` must be exactly as returned by [`arc_vocab_encode`].
 */
void arc_ids_free(uint32_t *ids, size_t len);

/**
 * Normalized copy of `text`; free with [`arc_string_free`].
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum ArcStatus arc_normalize(const char *text, char **out);

/**
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum ArcStatus arc_arabic_ratio(const char *text, double *out);

/**
 * Loads `merges.txt` and `vocab.json` from `dir`.
 *
 * # Safety
 * `dir` must be a NUL-terminated string; `out` must be writable.
 */
enum ArcStatus arc_vocab_load(const char *dir, struct ArcVocab **out);

/**
 * Trains a vocabulary of at most `target_size` entries on `n` texts.
 *
 * # Safety
 * `texts` must point to `n` NUL-terminated strings; `out` must be writable.
 */
enum ArcStatus arc_vocab_train(const char *const *texts,
                               size_t n,
                               size_t target_size,
                               struct ArcVocab **out);

/**
 * # Safety
 * `vocab` must be a live handle; `dir` a NUL-terminated string.
 */
enum ArcStatus arc_vocab_save(const struct ArcVocab *vocab, const char *dir);

/**
 * Number of ids in use, special tokens included. 0 for NULL.
 *
 * # Safety
 * `vocab` must be a live handle or NULL.
 */
size_t arc_vocab_size(const struct ArcVocab *vocab);

/**
 * Encodes `text`; free the ids with [`arc_ids_free`].
 *
 * # Safety
 * `vocab` must be a live handle, `text` NUL-terminated, outputs writable.
 */
enum ArcStatus arc_vocab_encode(const struct ArcVocab *vocab,
                                const char *text,
                                uint32_t **ids,
                                size_t *len);

/**
 * Decodes `len` ids into text; invalid UTF-8 becomes U+FFFD. Free the result
 * with [`arc_string_free`].
 *
 * # Safety
 * `vocab` must be a live handle, `ids` must hold `len` values.
 */
enum ArcStatus arc_vocab_decode(const struct ArcVocab *vocab,
                                const uint32_t *ids,
                                size_t len,
                                char **out);

/**
 * # Safety
 * `vocab` must come from this library or be NULL; it is invalid afterwards.
 */
void arc_vocab_free(struct ArcVocab *vocab);

/**
 * A filter with default thresholds.
 */
struct ArcFilter *arc_filter_new(void);

/**
 * Filters one document. `*kept` is set to 1 and `*out` to the cleaned text
 * (sentences joined by newlines) when the document survives, otherwise to 0
 * and NULL.
 *
 * # Safety
 * `filter` must be a live handle, `text` NUL-terminated, outputs writable.
 */
enum ArcStatus arc_filter_document(struct ArcFilter *filter,
                                   const char *text,
                                   int32_t *kept,
                                   char **out);

/**
 * # Safety
 * `filter` must come from [`arc_filter_new`] or be NULL.
 */
void arc_filter_free(struct ArcFilter *filter);

/**
 * Pearson correlation of two length-`n` arrays.
 *
 * # Safety
 * `xs` and `ys` must each hold `n` values; `out` must be writable.
 */
enum ArcStatus arc_pearson(const double *xs, const double *ys, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARCORPUS_H */
