/* Exercises the public C API from plain C. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "bmlearn/bmlearn.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
    do {                                                               \
        if (!(cond)) {                                                 \
            fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
            ++failures;                                                \
        }                                                              \
    } while (0)

#define EXPECT_OK(call)                                                                              \
    do {                                                                                             \
        bml_status s_ = (call);                                                                      \
        if (s_ != BML_OK) {                                                                          \
            fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call, bml_status_name(s_), \
                    bml_last_error());                                                               \
            ++failures;                                                                              \
        }                                                                                            \
    } while (0)

static void test_machine(void) {
    bml_machine* m = NULL;
    EXPECT_OK(bml_machine_new(3, 2, &m));
    EXPECT(bml_machine_units(m) == 3);
    EXPECT(bml_machine_visible(m) == 2);

    EXPECT_OK(bml_machine_set_weight(m, 0, 1, 0.5));
    double w = 0;
    EXPECT_OK(bml_machine_weight(m, 1, 0, &w));
    EXPECT(w == 0.5);
    EXPECT_OK(bml_machine_set_bias(m, 2, -1.0));

    const uint8_t x[3] = {1, 1, 1};
    double e = 0;
    EXPECT_OK(bml_machine_energy(m, x, 3, &e));
    EXPECT(fabs(e - 0.5) < 1e-15);

    double p = 0;
    EXPECT_OK(bml_machine_conditional(m, x, 3, 2, &p));
    EXPECT(fabs(p - 1.0 / (1.0 + exp(1.0))) < 1e-15);

    EXPECT(bml_machine_set_weight(m, 1, 1, 1.0) == BML_INVALID_ARGUMENT);
    EXPECT(strlen(bml_last_error()) > 0);
    EXPECT(bml_machine_set_weight(m, 0, 7, 1.0) != BML_OK);
    EXPECT(bml_machine_energy(m, x, 2, &e) == BML_DIMENSION_MISMATCH);
    const uint8_t bad[3] = {1, 2, 0};
    EXPECT(bml_machine_energy(m, bad, 3, &e) != BML_OK);
    EXPECT(bml_machine_new(2, 3, NULL) != BML_OK);

    char* text = NULL;
    EXPECT_OK(bml_machine_to_text(m, &text));
    bml_machine* back = NULL;
    EXPECT_OK(bml_machine_from_text(text, &back));
    int same = 0;
    EXPECT_OK(bml_machine_equal(m, back, &same));
    EXPECT(same == 1);
    bml_string_free(text);

    bml_machine* copy = NULL;
    EXPECT_OK(bml_machine_clone(m, &copy));
    EXPECT_OK(bml_machine_set_bias(copy, 0, 3.0));
    EXPECT_OK(bml_machine_equal(m, copy, &same));
    EXPECT(same == 0);

    EXPECT(bml_machine_from_text("not a machine", &back) == BML_PARSE_ERROR);
    EXPECT(bml_machine_load("/nonexistent/model.bm", &back) == BML_IO_ERROR);

    bml_machine_free(copy);
    bml_machine_free(back);
    bml_machine_free(m);
    bml_machine_free(NULL);
}

static void test_oracle(void) {
    bml_machine* m = NULL;
    EXPECT_OK(bml_machine_new(3, 3, &m));
    double lz = 0;
    EXPECT_OK(bml_oracle_log_z(m, &lz));
    EXPECT(fabs(lz - 3 * log(2.0)) < 1e-12);

    double q[8], p[8];
    EXPECT_OK(bml_oracle_visible_marginal(m, p, 8));
    for (int i = 0; i < 8; ++i) {
        EXPECT(fabs(p[i] - 0.125) < 1e-15);
        q[i] = p[i];
    }
    double kl = -1;
    EXPECT_OK(bml_kl_divergence(q, p, 8, &kl));
    EXPECT(kl == 0.0);
    EXPECT(bml_oracle_visible_marginal(m, p, 4) == BML_DIMENSION_MISMATCH);

    double first[3], pair[9];
    EXPECT_OK(bml_oracle_moments(m, 3, first, pair));
    EXPECT(fabs(first[0] - 0.5) < 1e-15);
    EXPECT(fabs(pair[1] - 0.25) < 1e-15);
    EXPECT(fabs(pair[4] - 0.5) < 1e-15);

    const size_t cap = bml_enumeration_cap();
    EXPECT_OK(bml_set_enumeration_cap(2));
    EXPECT(bml_oracle_log_z(m, &lz) == BML_CAP_EXCEEDED);
    EXPECT_OK(bml_set_enumeration_cap(cap));
    bml_machine_free(m);
}

static void test_dataset(void) {
    const uint8_t bits[6] = {1, 0, 1, 1, 1, 0};
    bml_dataset* d = NULL;
    EXPECT_OK(bml_dataset_from_bits(2, bits, 3, &d));
    EXPECT(bml_dataset_size(d) == 3);
    EXPECT(bml_dataset_dim(d) == 2);
    uint8_t row[2];
    EXPECT_OK(bml_dataset_row(d, 1, row, 2));
    EXPECT(row[0] == 1 && row[1] == 1);
    double dist[4];
    EXPECT_OK(bml_dataset_distribution(d, dist, 4));
    EXPECT(fabs(dist[1] - 2.0 / 3.0) < 1e-15);
    EXPECT(fabs(dist[3] - 1.0 / 3.0) < 1e-15);
    EXPECT(dist[0] == 0.0 && dist[2] == 0.0);
    EXPECT(bml_dataset_row(d, 3, row, 2) != BML_OK);
    bml_dataset_free(d);

    const uint8_t bad[2] = {1, 5};
    EXPECT(bml_dataset_from_bits(2, bad, 1, &d) != BML_OK);
    EXPECT(bml_dataset_load_mnist("/nonexistent/images", NULL, 128, 0, 0, &d) == BML_IO_ERROR);
}

static void test_config(void) {
    bml_config* c = NULL;
    EXPECT_OK(bml_config_new(&c));
    char* value = NULL;
    EXPECT_OK(bml_config_get(c, "learning_rate", &value));
    EXPECT(strcmp(value, "0.007") == 0);
    bml_string_free(value);

    EXPECT_OK(bml_config_set(c, "--batch-size", "25"));
    EXPECT_OK(bml_config_get(c, "batch_size", &value));
    EXPECT(strcmp(value, "25") == 0);
    bml_string_free(value);
    EXPECT(bml_config_set(c, "batch_size", "many") == BML_PARSE_ERROR);
    EXPECT(bml_config_set(c, "no_such_key", "1") == BML_INVALID_ARGUMENT);

    EXPECT(bml_config_key_count() > 10);
    for (size_t i = 0; i < bml_config_key_count(); ++i) {
        EXPECT(bml_config_key_name(i) != NULL);
        EXPECT(bml_config_key_help(i) != NULL);
    }
    EXPECT(bml_config_key_name(bml_config_key_count()) == NULL);

    char* meta = NULL;
    EXPECT_OK(bml_config_metadata(c, &meta));
    EXPECT(strstr(meta, bml_rng_algorithm()) != NULL);
    bml_config* again = NULL;
    EXPECT_OK(bml_config_new(&again));
    EXPECT_OK(bml_config_load_text(again, meta));
    char *a = NULL, *b = NULL;
    EXPECT_OK(bml_config_to_text(c, &a));
    EXPECT_OK(bml_config_to_text(again, &b));
    EXPECT(strcmp(a, b) == 0);
    bml_string_free(a);
    bml_string_free(b);
    bml_string_free(meta);
    bml_config_free(again);
    bml_config_free(c);
    bml_config_free(NULL);
}

static void test_training(void) {
    bml_config* c = NULL;
    EXPECT_OK(bml_config_new(&c));
    EXPECT_OK(bml_config_load_text(c,
                                   "artificial_visible = 4\n"
                                   "artificial_size = 40\n"
                                   "artificial_test_size = 0\n"
                                   "hidden = 2\n"
                                   "batch_size = 10\n"
                                   "epochs = 2\n"
                                   "learning_rate = 0.05\n"
                                   "eval_samples = 2000\n"));
    EXPECT_OK(bml_config_validate(c));

    bml_machine *model = NULL, *initial = NULL, *model2 = NULL;
    char *trace = NULL, *trace2 = NULL;
    EXPECT_OK(bml_train(c, &model, &initial, &trace));
    EXPECT_OK(bml_train(c, &model2, NULL, &trace2));
    int same = 0;
    EXPECT_OK(bml_machine_equal(model, model2, &same));
    EXPECT(same == 1);
    EXPECT(trace != NULL && trace2 != NULL && strncmp(trace, "epoch,", 6) == 0);
    EXPECT(bml_machine_units(initial) == 6);

    char* csv = NULL;
    EXPECT_OK(bml_evaluate(model, c, 1, 0, &csv));
    EXPECT(csv != NULL && strstr(csv, "train") != NULL);
    bml_string_free(csv);

    bml_dataset *train = NULL, *test = NULL;
    EXPECT_OK(bml_generate_data(c, &train, &test));
    EXPECT(bml_dataset_size(train) == 40);
    EXPECT(test == NULL);
    bml_dataset_free(train);

    EXPECT(bml_figdata_count() == 4);
    EXPECT(bml_figdata("no-such-figure", c, &csv) != BML_OK);

    /* CD needs a bipartite model. */
    EXPECT_OK(bml_config_set(c, "method", "cd"));
    EXPECT(bml_train(c, &model2, NULL, &trace2) != BML_OK);

    bml_string_free(trace);
    bml_string_free(trace2);
    bml_machine_free(model);
    bml_machine_free(model2);
    bml_machine_free(initial);
    bml_config_free(c);
}

int main(void) {
    EXPECT(bml_version() != NULL && strlen(bml_version()) > 0);
    EXPECT(strcmp(bml_status_name(BML_CAP_EXCEEDED), "") != 0);
    test_machine();
    test_oracle();
    test_dataset();
    test_config();
    test_training();
    if (failures) {
        fprintf(stderr, "%d failure(s)\n", failures);
        return 1;
    }
    printf("capi: all checks passed\n");
    return 0;
}
