#include <stdio.h>
#include <stdlib.h>
#include "fiberscope.h"

int main(int argc, char **argv) {
    if (argc != 2) {
        return 2;
    }
    FsEngine *engine = NULL;
    if (fs_engine_open(argv[1], &engine) != FS_STATUS_OK) {
        fprintf(stderr, "open: %s\n", fs_last_error());
        return 1;
    }
    size_t subjects = 0, clusters = 0;
    fs_engine_subject_count(engine, &subjects);
    fs_engine_cluster_count(engine, &clusters);

    FsLayout *layout = NULL;
    FsStatus st = fs_engine_project(engine, "fa1,fa2", 0, 7, &layout);
    if (st != FS_STATUS_BAD_K) {
        return 1;
    }
    if (fs_engine_project(engine, "fa1,fa2", -1, 7, &layout) != FS_STATUS_OK) {
        fprintf(stderr, "project: %s\n", fs_last_error());
        return 1;
    }
    size_t n = 0;
    fs_layout_len(layout, &n);
    double x = 0, y = 0;
    uint32_t cid = 0;
    bool pivot = false;
    fs_layout_point(layout, 0, &x, &y, &cid, &pivot);
    char subject[16];
    size_t needed = 0;
    fs_layout_subject(layout, 0, subject, sizeof subject, &needed);
    printf("%zu %zu %zu %s\n", subjects, clusters, n, subject);
    fs_layout_free(layout);
    fs_engine_free(engine);
    return 0;
}
