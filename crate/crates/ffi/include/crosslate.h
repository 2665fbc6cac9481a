#ifndef CROSSLATE_H
#define CROSSLATE_H

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CrosslateStatus {
  CROSSLATE_STATUS_OK = 0,
  CROSSLATE_STATUS_NULL_POINTER = 1,
  CROSSLATE_STATUS_INVALID_UTF8 = 2,
  CROSSLATE_STATUS_INVALID_ARGUMENT = 3,
  /**
   * Delimiters missing, repeated or out of order in translated text.
   */
  CROSSLATE_STATUS_RECOVER_FAILED = 4,
  CROSSLATE_STATUS_OUT_OF_RANGE = 5,
  CROSSLATE_STATUS_PANIC = 6,
} CrosslateStatus;

typedef struct CrosslateDelimiters CrosslateDelimiters;

typedef struct CrosslatePricing CrosslatePricing;

typedef struct CrosslateSegments CrosslateSegments;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last non-OK status on this thread, or NULL. Valid until
 * the next failing call on the same thread.
 */
const char *crosslate_last_error(void);

/**
 * # Safety
 * `s` is NULL or a string returned by this library and not yet freed.
 */
void crosslate_string_free(char *s);

/**
 * `<answer_start>` / `<answer_end>`. Never NULL.
 */
struct CrosslateDelimiters *crosslate_delimiters_default(void);

/**
 * # Safety
 * `start` and `end` are NUL-terminated; `out` is writable.
 */
enum CrosslateStatus crosslate_delimiters_new(const char *start,
                                              const char *end,
                                              struct CrosslateDelimiters **out);

/**
 * # Safety
 * `d` is NULL or a handle from this library and not yet freed.
 */
void crosslate_delimiters_free(struct CrosslateDelimiters *d);

/**
 * Wraps the answer starting at character `answer_start` of `context` in
 * the delimiters.
 *
 * # Safety
 * Pointers are valid; strings are NUL-terminated; `out_marked` is writable.
 */
enum CrosslateStatus crosslate_mark(const struct CrosslateDelimiters *delimiters,
                                    const char *context,
                                    size_t answer_start,
                                    const char *answer,
                                    char **out_marked);

/**
 * Strips the delimiters from translated text and reports the answer and
 * its character offset.
 *
 * # Safety
 * Pointers are valid; `translated` is NUL-terminated; outs are writable.
 */
enum CrosslateStatus crosslate_recover(const struct CrosslateDelimiters *delimiters,
                                       const char *translated,
                                       char **out_context,
                                       char **out_answer,
                                       size_t *out_answer_start);

/**
 * Splits `text` into sentences with the built-in abbreviation list.
 *
 * # Safety
 * `text` is NUL-terminated; `out` is writable.
 */
enum CrosslateStatus crosslate_split_sentences(const char *input, struct CrosslateSegments **out);

/**
 * # Safety
 * `segments` is a live handle.
 */
size_t crosslate_segments_len(const struct CrosslateSegments *segments);

/**
 * Segment `index`: its byte offset in the input and a copy of its text.
 *
 * # Safety
 * `segments` is a live handle; outs are writable.
 */
enum CrosslateStatus crosslate_segments_get(const struct CrosslateSegments *segments,
                                            size_t index,
                                            size_t *out_byte_start,
                                            char **out_text);

/**
 * # Safety
 * `segments` is NULL or a handle from this library and not yet freed.
 */
void crosslate_segments_free(struct CrosslateSegments *segments);

/**
 * Token F1 after normalization for `language` ("en", "pt"; NULL = "en").
 *
 * # Safety
 * Strings are NUL-terminated or `language` is NULL; `out` is writable.
 */
enum CrosslateStatus crosslate_token_f1(const char *prediction,
                                        const char *gold,
                                        const char *language,
                                        double *out);

/**
 * Exact match (0 or 1) after normalization for `language`.
 *
 * # Safety
 * As [`crosslate_token_f1`].
 */
enum CrosslateStatus crosslate_exact_match(const char *prediction,
                                           const char *gold,
                                           const char *language,
                                           double *out);

/**
 * Bundled profile name (`paper-2021`) or JSON file path.
 *
 * # Safety
 * `name_or_path` is NUL-terminated; `out` is writable.
 */
enum CrosslateStatus crosslate_pricing_load(const char *name_or_path,
                                            struct CrosslatePricing **out);

/**
 * # Safety
 * `commercial` has `n_commercial` doubles and `gpu` has `n_gpu`; `out` is
 * writable.
 */
enum CrosslateStatus crosslate_pricing_new(const double *commercial_per_million,
                                           size_t n_commercial,
                                           const double *gpu_per_hour,
                                           size_t n_gpu,
                                           struct CrosslatePricing **out);

/**
 * # Safety
 * `p` is NULL or a handle from this library and not yet freed.
 */
void crosslate_pricing_free(struct CrosslatePricing *p);

/**
 * USD to translate `chars` characters commercially.
 *
 * # Safety
 * `pricing` is a live handle; `out` is writable.
 */
enum CrosslateStatus crosslate_one_time_commercial(const struct CrosslatePricing *pricing,
                                                   uint64_t chars,
                                                   double *out);

/**
 * USD for `wall_hours` GPU hours.
 *
 * # Safety
 * `pricing` is a live handle; `out` is writable.
 */
enum CrosslateStatus crosslate_one_time_opensource(const struct CrosslatePricing *pricing,
                                                   double wall_hours,
                                                   double *out);

/**
 * Commercial USD per `n` examples of `avg_chars` characters.
 *
 * # Safety
 * `pricing` is a live handle; `out` is writable.
 */
enum CrosslateStatus crosslate_recurring_commercial(const struct CrosslatePricing *pricing,
                                                    double avg_chars,
                                                    double n,
                                                    double *out);

/**
 * GPU USD per `n` examples at `seconds_per_batch` per batch of
 * `batch_size`.
 *
 * # Safety
 * `pricing` is a live handle; `out` is writable.
 */
enum CrosslateStatus crosslate_recurring_opensource(const struct CrosslatePricing *pricing,
                                                    double seconds_per_batch,
                                                    size_t batch_size,
                                                    double n,
                                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROSSLATE_H */
