#include <math.h>
#include <stdio.h>
#include "closedloop.h"

#define CHECK(call)                                                     \
    do {                                                                \
        ClStatus st_ = (call);                                          \
        if (st_ != CL_STATUS_OK) {                                      \
            fprintf(stderr, "%s -> %d: %s\n", #call, st_, cl_last_error()); \
            return 1;                                                   \
        }                                                               \
    } while (0)

int main(void) {
    ClDmc *bsc = NULL;
    ClTree *tree = NULL;
    double opt, best, bound, bias;
    size_t labels[7], n_labels = 0;

    CHECK(cl_dmc_bsc(0.3, &bsc));
    CHECK(cl_tree_optimal(bsc, 3, 0, 1, 0.25, &tree));
    CHECK(cl_tree_labels(tree, labels, 7, &n_labels));
    CHECK(cl_tree_success_probability(tree, bsc, 0, 1, 0.25, &opt));
    CHECK(cl_exhaustive_max_success(bsc, 3, 0, 1, 0.25, &best));
    CHECK(cl_lemma1_bound(3, 0.25, &bound));
    CHECK(cl_martingale_bias(tree, bsc, 0, 1, 0.25, &bias));
    if (n_labels != 7 || fabs(opt - best) > 1e-12 || best > bound || bias > 1e-12) {
        fprintf(stderr, "unexpected values\n");
        return 1;
    }
    if (cl_dmc_bsc(1.5, NULL) == CL_STATUS_OK || cl_last_error() == NULL) {
        fprintf(stderr, "error path not taken\n");
        return 1;
    }
    cl_tree_free(tree);
    cl_dmc_free(bsc);
    printf("ok %s %.12f\n", cl_version(), best);
    return 0;
}
