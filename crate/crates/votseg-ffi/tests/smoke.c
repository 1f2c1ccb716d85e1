#include <stdio.h>
#include <string.h>

#include "votseg.h"

#define CHECK(cond)                                                     \
    do {                                                                \
        if (!(cond)) {                                                  \
            fprintf(stderr, "failed: %s (%s)\n", #cond,                 \
                    votseg_last_error_message());                       \
            return 1;                                                   \
        }                                                               \
    } while (0)

int main(int argc, char **argv) {
    CHECK(argc == 2);
    CHECK(strlen(votseg_version()) > 0);

    double scores[8] = {0, 0, 5, 0, 0, 0, 0, 7};
    size_t y1 = 0, y2 = 0;
    CHECK(votseg_decode(scores, 4, &y1, &y2) == VOTSEG_STATUS_OK);
    CHECK(y1 == 2 && y2 == 4);
    CHECK(votseg_task_loss(10, 20, 13, 20, 2) == 1.0);

    VotsegModel *missing = NULL;
    CHECK(votseg_model_load("/nonexistent/model.json", &missing) == VOTSEG_STATUS_IO_ERROR);
    CHECK(missing == NULL);
    CHECK(strlen(votseg_last_error_message()) > 0);

    VotsegModel *m = NULL;
    CHECK(votseg_model_load(argv[1], &m) == VOTSEG_STATUS_OK);
    size_t dim = votseg_model_input_dim(m);
    CHECK(dim > 0 && dim <= 16);
    enum { T = 120 };
    double frames[T * 16];
    for (size_t i = 0; i < T * dim; i++) {
        frames[i] = (double)((i * 7919) % 13) / 13.0;
    }
    VotsegMeasurement r;
    CHECK(votseg_model_predict(m, frames, T, dim, 1.0, &r) == VOTSEG_STATUS_OK);
    CHECK(r.y1 >= 1 && r.y1 < r.y2 && r.y2 <= T);
    CHECK(r.vot_type == 0 || r.vot_type == 1);
    CHECK(votseg_model_predict(m, frames, T, dim + 1, 1.0, &r) == VOTSEG_STATUS_DATA_ERROR);
    votseg_model_free(m);
    printf("ok\n");
    return 0;
}
