#include <math.h>
#include <stdio.h>
#include <string.h>

#include "nncomplete.h"

#define CHECK(cond)                                                    \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "check failed line %d: %s (%s)\n", __LINE__,     \
              #cond, nnc_last_error());                                \
      return 1;                                                        \
    }                                                                  \
  } while (0)

int main(void) {
  /* rows 0 and 1 agree on every shared column; (0, 2) is missing */
  double values[9] = {1, 2, NAN, 1, 2, 7, 5, 0, 4};
  uint8_t mask[9] = {1, 1, 0, 1, 1, 1, 1, 1, 1};
  NncMatrix *m = NULL;
  CHECK(nnc_matrix_new(3, 3, values, mask, &m) == NNC_STATUS_OK);

  size_t n = 0, t = 0, obs = 0;
  CHECK(nnc_matrix_dims(m, &n, &t, &obs) == NNC_STATUS_OK);
  CHECK(n == 3 && t == 3 && obs == 8);

  NncParams p = nnc_params_default();
  p.eta_row = 0.0;
  p.eta_row_is_percentile = false;
  double v = 0;
  bool fallback = true;
  size_t count = 0;
  CHECK(nnc_impute(m, NNC_METHOD_ROWNN, &p, 0, 2, &v, &fallback, &count) == NNC_STATUS_OK);
  CHECK(v == 7.0 && !fallback && count == 1);

  double full[9];
  size_t failed = 99;
  CHECK(nnc_complete(m, NNC_METHOD_ROWNN, &p, full, &failed) == NNC_STATUS_OK);
  CHECK(failed == 0 && full[2] == 7.0 && full[8] == 4.0);

  CHECK(nnc_impute(m, NNC_METHOD_ROWNN, &p, 5, 0, &v, NULL, NULL) == NNC_STATUS_INDEX_OUT_OF_RANGE);
  CHECK(strlen(nnc_last_error()) > 0);
  CHECK(nnc_matrix_new(3, 3, NULL, mask, &m) == NNC_STATUS_NULL_POINTER);

  nnc_matrix_free(m);
  nnc_matrix_free(NULL);
  printf("ok %s\n", nnc_version());
  return 0;
}
