#include <stdio.h>
#include "oa_ffi.h"

static const char *TEXT =
    "class A {\n"
    "  field f: int;\n"
    "  static method main() {\n"
    "    a = new A();\n"
    "    a.f = 1 @L;\n"
    "    a.f = 2 @R;\n"
    "  }\n"
    "}\n";

int main(void) {
    const char *paths[] = {"A.mir"};
    const char *texts[] = {TEXT};
    OaProgram *program = NULL;
    if (oa_program_from_sources(paths, texts, 1, &program) != OA_STATUS_OK) {
        fprintf(stderr, "%s\n", oa_last_error_message());
        return 3;
    }
    OaBudget budget = oa_budget_default();
    budget.wall_clock_ms = 0;
    int code = 0;
    for (size_t i = 0; i < oa_program_entry_count(program); i++) {
        char *entry = NULL;
        OaOutcome *outcome = NULL;
        oa_program_entry_name(program, i, &entry);
        if (oa_analyze(program, entry, OA_MODE_HYBRID, &budget, &outcome) == OA_STATUS_OK) {
            char *text = NULL, *json = NULL;
            oa_outcome_report_text(outcome, &text);
            oa_outcome_record_json(outcome, true, &json);
            printf("%s%s", text, json);
            if (oa_outcome_verdict(outcome) == OA_VERDICT_TRUE) code = 1;
            oa_string_free(text);
            oa_string_free(json);
        }
        oa_outcome_free(outcome);
        oa_string_free(entry);
    }
    oa_program_free(program);
    return code;
}
