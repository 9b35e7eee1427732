/* Build: cargo build -p gpac-ffi
 *        cc blobs.c -I../include -L../../../target/debug -l:libgpac_ffi.a -lm -lpthread -ldl */
#include <stdio.h>
#include <stdlib.h>
#include "gpac.h"

int main(void) {
    enum { N = 200, D = 2 };
    double x[N * D];
    int64_t truth[N];
    srand(1);
    for (int i = 0; i < N; i++) {
        double cx = (i < N / 2) ? 0.0 : 10.0;
        x[i * D] = cx + (double)rand() / RAND_MAX;
        x[i * D + 1] = (double)rand() / RAND_MAX;
        truth[i] = i < N / 2 ? 0 : 1;
    }

    GpacDataset *ds = NULL;
    if (gpac_dataset_new(x, N, D, truth, &ds) != GPAC_STATUS_OK) {
        fprintf(stderr, "dataset: %s\n", gpac_last_error_message());
        return 1;
    }
    GpacParams params = gpac_params_default(2);
    GpacResult *res = NULL;
    if (gpac_fit(ds, &params, &res) != GPAC_STATUS_OK) {
        fprintf(stderr, "fit: %s\n", gpac_last_error_message());
        gpac_dataset_free(ds);
        return 1;
    }
    size_t labels[N];
    int64_t pred[N];
    gpac_result_labels(res, labels, N);
    for (int i = 0; i < N; i++) pred[i] = (int64_t)labels[i];
    double acc = 0.0;
    gpac_acc(pred, truth, N, &acc);
    printf("gpac %s: %zu epochs, acc %.3f\n", gpac_version(), gpac_result_epochs(res), acc);

    gpac_result_free(res);
    gpac_dataset_free(ds);
    return 0;
}
