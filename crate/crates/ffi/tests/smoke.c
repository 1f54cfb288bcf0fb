#include <stdbool.h>
#include <stdint.h>
#include <stdio.h>
#include <string.h>

#include "feva.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                                 \
        }                                                             \
    } while (0)

static const char *PROJECT =
    "{\"id\":\"p\",\"name\":\"P\",\"sources\":[{\"id\":\"v\",\"uri\":\"v.mp4\","
    "\"fps\":{\"num\":25,\"den\":1},\"duration\":60000000,\"offset\":0,"
    "\"width\":0,\"height\":0}],\"primary_source_id\":\"v\",\"dataset_refs\":[]}";

int main(void) {
    FevaSession *s = NULL;
    CHECK(feva_session_new(PROJECT, NULL, "{\"reaction\":{\"delta_r\":300000}}", &s) == FEVA_STATUS_OK);
    CHECK(feva_session_key(s, "space", NULL) == FEVA_STATUS_OK);
    CHECK(feva_session_advance(s, 5000000) == FEVA_STATUS_OK);
    CHECK(feva_session_key(s, "a", NULL) == FEVA_STATUS_OK);
    CHECK(feva_session_advance(s, 3000000) == FEVA_STATUS_OK);
    char *event = NULL;
    CHECK(feva_session_key(s, "a", &event) == FEVA_STATUS_OK);
    CHECK(strstr(event, "\"start\":4700000") != NULL);
    CHECK(strstr(event, "\"end\":7700000") != NULL);
    feva_string_free(event);

    CHECK(feva_session_key(s, "hyper+q", NULL) == FEVA_STATUS_UNBOUND_CHORD);
    CHECK(strcmp(feva_last_error_code(), "unbound_chord") == 0);

    uint64_t pos = 0;
    bool playing = false;
    CHECK(feva_session_position(s, &pos) == FEVA_STATUS_OK && pos == 8000000);
    CHECK(feva_session_playing(s, &playing) == FEVA_STATUS_OK && playing);
    feva_session_free(s);

    uint64_t t = 0;
    CHECK(feva_frame_step(1000000, 30000, 1001, 1, 10000000, &t) == FEVA_STATUS_OK && t == 1034367);
    printf("ok %s\n", feva_version());
    return 0;
}
