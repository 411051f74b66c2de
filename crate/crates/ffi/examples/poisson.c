/* Solves the fractional Poisson problem through the C API and prints u(0). */
#include <math.h>
#include <stdio.h>
#include "nlreg.h"

int main(void) {
    NlregKernel *k = NULL;
    NlregSolution *s = NULL;
    char msg[256];
    double u0 = 0.0;

    if (nlreg_kernel_from_toml("family = { kind = \"fractional\", s = 0.5 }", 0.0, &k) != NLREG_STATUS_OK ||
        nlreg_solve_constant(k, -1.0, 1.0, 0.25, 1.0 / 64.0, 1.0, 0.0, 0.0, &s) != NLREG_STATUS_OK ||
        nlreg_solution_eval(s, 0.0, &u0) != NLREG_STATUS_OK) {
        nlreg_last_error(msg, sizeof msg);
        fprintf(stderr, "nlreg: %s\n", msg);
        return 1;
    }
    printf("nodes %zu u(0) %.6f exact %.6f\n", nlreg_solution_len(s), u0, 1.0 / M_PI);
    nlreg_solution_free(s);
    nlreg_kernel_free(k);
    return fabs(u0 - 1.0 / M_PI) < 0.01 ? 0 : 1;
}
