#include <stdio.h>
#include <string.h>
#include "modal.h"

static const char *SRC =
    ":- typedef list(T) -> ([] ; [T|list(T)]).\n"
    ":- pred single(list(T), list(T)).\n"
    ":- mode single(in, out).\n"
    "single(X, Y) :- Y = [U1|U2], U2 = [], X = [U1|U3].\n";

int main(void) {
    ModalProgram *prog = NULL;
    ModalReport *report = NULL;
    char *text = NULL;
    if (modal_program_parse(SRC, &prog) != MODAL_OK) {
        fprintf(stderr, "parse: %s\n", modal_last_error());
        return 10;
    }
    if (modal_check(prog, 0, &report) != MODAL_OK) return 11;
    if (modal_report_listing(report, &text) != MODAL_OK) return 12;
    if (strcmp(text, "single_mode1(X, Y) :- U2 := [], X =: [U1|U3], Y := [U1|U2].\n") != 0) {
        fprintf(stderr, "listing: %s", text);
        return 13;
    }
    modal_string_free(text);
    if (modal_report_diagnostic(report, 0, &text) != MODAL_RANGE) return 14;
    modal_report_free(report);
    modal_program_free(prog);
    if (modal_program_parse(":- pred p(", &prog) != MODAL_PARSE || prog != NULL) return 15;
    if (modal_last_error() == NULL) return 16;
    printf("ok %s\n", modal_version());
    return 0;
}
