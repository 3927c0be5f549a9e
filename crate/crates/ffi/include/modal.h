#ifndef MODAL_H
#define MODAL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success, or a check without errors.
 */
#define MODAL_OK 0

/**
 * The check found mode errors (or warnings under `MODAL_WERROR`).
 */
#define MODAL_MODE 1

/**
 * Syntax, definition or type error in the input.
 */
#define MODAL_PARSE 2

/**
 * Internal failure; the message says what.
 */
#define MODAL_INTERNAL 3

/**
 * A required pointer argument was null.
 */
#define MODAL_NULL -1

/**
 * A string argument was not valid UTF-8.
 */
#define MODAL_UTF8 -2

/**
 * An index was out of range.
 */
#define MODAL_RANGE -3

/**
 * Never insert `init` calls.
 */
#define MODAL_NO_INIT 1

/**
 * Count warnings as errors in the report status.
 */
#define MODAL_WERROR 2

/**
 * Skip parameter recovery at polymorphic calls.
 */
#define MODAL_NO_POLY 4

/**
 * A loaded program.
 */
typedef struct ModalProgram ModalProgram;

/**
 * The result of checking a program.
 */
typedef struct ModalReport ModalReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse, normalize and type `source`. On success `*out` holds a new handle.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` a valid pointer.
 */
int32_t modal_program_parse(const char *source, struct ModalProgram **out);

/**
 * # Safety
 * `program` must come from [`modal_program_parse`] and not be freed twice. Null is ignored.
 */
void modal_program_free(struct ModalProgram *program);

/**
 * Check every mode declaration. `flags` combines `MODAL_NO_INIT`,
 * `MODAL_WERROR` and `MODAL_NO_POLY`. Returns the report status
 * (`MODAL_OK`, `MODAL_MODE` or `MODAL_INTERNAL`) with `*out` set, or a
 * negative code or `MODAL_PARSE` with `*out` null.
 *
 * # Safety
 * `program` must be a live handle and `out` a valid pointer.
 */
int32_t modal_check(const struct ModalProgram *program, uint32_t flags, struct ModalReport **out);

/**
 * `MODAL_OK`, `MODAL_MODE` or `MODAL_INTERNAL`, as returned by [`modal_check`].
 *
 * # Safety
 * `report` must be a live handle.
 */
int32_t modal_report_status(const struct ModalReport *report);

/**
 * Number of diagnostics in the report; 0 for a null handle.
 *
 * # Safety
 * `report` must be a live handle or null.
 */
size_t modal_report_diagnostic_count(const struct ModalReport *report);

/**
 * Diagnostic `index` formatted as `line:col: severity[CODE] ...: message`.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
int32_t modal_report_diagnostic(const struct ModalReport *report, size_t index, char **out);

/**
 * The emitted procedures, one clause per line.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
int32_t modal_report_listing(const struct ModalReport *report, char **out);

/**
 * # Safety
 * `report` must come from [`modal_check`] and not be freed twice. Null is ignored.
 */
void modal_report_free(struct ModalReport *report);

/**
 * The type-instantiation grammar of a type under an instantiation, both
 * in source syntax, one production per line.
 *
 * # Safety
 * `program` must be a live handle, `ty` and `inst` NUL-terminated strings
 * and `out` a valid pointer.
 */
int32_t modal_dump_ti(const struct ModalProgram *program,
                      const char *ty,
                      const char *inst,
                      char **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. Null is ignored.
 */
void modal_string_free(char *s);

/**
 * Message for the last failing call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *modal_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *modal_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MODAL_H */
