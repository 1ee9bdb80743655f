/* Exercises the public header from plain C. */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "fluxcirc/fluxcirc.h"

static int failures = 0;

#define EXPECT(cond)                                          \
  do {                                                        \
    if (!(cond)) {                                            \
      fprintf(stderr, "%s:%d: FAILED %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                             \
    }                                                         \
  } while (0)

static void count_lines(const char* line, void* user) {
  (void)line;
  ++*(int*)user;
}

int main(void) {
  const char* text =
      "[device]\nlength = 26\nfluxons = 8\ng = 0.02\n"
      "[experiment]\nname = splitting\nbias = 0:4e-4:5\n"
      "[output]\ndirectory = somewhere\n";
  fc_config* cfg = NULL;
  EXPECT(fc_config_parse(text, &cfg) == FC_OK);
  const char* name = NULL;
  EXPECT(fc_config_experiment(cfg, &name) == FC_OK && strcmp(name, "splitting") == 0);
  const char* dir = NULL;
  EXPECT(fc_config_output_dir(cfg, &dir) == FC_OK && strcmp(dir, "somewhere") == 0);

  fc_result* res = NULL;
  int lines = 0;
  EXPECT(fc_run(cfg, 1, count_lines, &lines, &res) == FC_OK);
  EXPECT(lines >= 1);
  size_t tables = 0, rows = 0;
  EXPECT(fc_result_table_count(res, &tables) == FC_OK && tables == 1);
  EXPECT(fc_result_row_count(res, 0, &rows) == FC_OK && rows == 5);
  const char* csv = NULL;
  EXPECT(fc_result_csv(res, 0, &csv) == FC_OK && strncmp(csv, "# table: splitting\n", 19) == 0);
  EXPECT(fc_result_csv(res, 3, &csv) == FC_ERR_ARGUMENT);
  EXPECT(strstr(fc_last_error(), "out of range") != NULL);
  int failed = -1;
  EXPECT(fc_result_failed_points(res, &failed) == FC_OK && failed == 0);
  fc_result_free(res);
  fc_config_free(cfg);

  EXPECT(fc_config_parse("[device]\nbogus = 1\n[experiment]\nname = iv\n", &cfg) == FC_ERR_CONFIG);
  EXPECT(strstr(fc_last_error(), "bogus") != NULL);
  EXPECT(fc_config_load("/nonexistent/file.ini", &cfg) == FC_ERR_CONFIG);
  EXPECT(fc_config_parse(NULL, &cfg) == FC_ERR_ARGUMENT);
  EXPECT(fc_run(NULL, 1, NULL, NULL, &res) == FC_ERR_ARGUMENT);
  fc_config_free(NULL);
  fc_result_free(NULL);

  double k = 0, w = 0, v = 0, re = 0, im = 0;
  EXPECT(fc_train_modulus(26.0, 8, 0.0, &k) == FC_OK && k > 0.0 && k < 1.0);
  EXPECT(fc_mode_frequency(1, 8, 26.0, &w) == FC_OK && fabs(w * 33.5e9 / 7.53e9 - 1.0) < 0.01);
  EXPECT(fc_dc_voltage(15.0, 8, 0.02, 0.1, &v) == FC_OK && v < 0.0);
  EXPECT(fc_dc_voltage(15.0, 8, 0.0, 0.1, &v) == FC_ERR_ARGUMENT);
  EXPECT(fc_lc_reflection(1.0, 1.0, 1.0, 0.0, 2.0, &re, &im) == FC_OK && fabs(re - 1.0) < 1e-12);
  EXPECT(fc_lc_reflection(1.0, -1.0, 1.0, 0.0, 2.0, &re, &im) == FC_ERR_ARGUMENT);
  EXPECT(fc_train_modulus(26.0, 8, 0.0, NULL) == FC_ERR_ARGUMENT);
  EXPECT(strcmp(fc_status_name(FC_ERR_NUMERICAL), "numerical") == 0);
  EXPECT(strlen(fc_version()) > 0);

  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("capi: all checks passed\n");
  return 0;
}
