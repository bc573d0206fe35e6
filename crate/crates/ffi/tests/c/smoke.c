/* SPDX-License-Identifier: Apache-2.0 */
#include <stdio.h>
#include <string.h>
#include "vfprune.h"

int main(int argc, char **argv) {
    static char src[1 << 16];
    FILE *f = fopen(argv[1], "rb");
    if (!f) return 10;
    size_t n = fread(src, 1, sizeof src - 1, f);
    fclose(f);
    src[n] = 0;

    VfProgram *prog = NULL;
    if (vf_program_parse(src, &prog) != VF_STATUS_OK) return 11;
    VfOptions opts = vf_options_default();
    opts.no_timing = true;
    VfReport *rep = NULL;
    if (vf_analyze(prog, VF_MODE_DIFF, &opts, &rep) != VF_STATUS_OK) return 12;
    printf("%zu %d %d\n", vf_report_bug_count(rep), vf_report_soundness_flag(rep),
           vf_report_bugs_mismatch(rep));
    if (strstr(vf_report_json(rep), "\"comparison\"") == NULL) return 13;
    vf_report_free(rep);
    vf_program_free(prog);

    if (vf_program_parse("func f( {", &prog) != VF_STATUS_PARSE) return 14;
    if (prog != NULL || strlen(vf_last_error()) == 0) return 15;
    return 0;
}
