#include <stdio.h>
#include <string.h>

#include "swapzon/swapzon.h"

int main(void) {
  swz_model* m = NULL;
  double v[3];
  double aux = 0.0;
  double w = 0.0;
  if (swz_model_create("\"sym_three_value\"", 1, &m) != SWZ_OK) return 1;
  if (swz_sample_sequence(m, 3, 1, 0, v, &aux, &w) != SWZ_OK) return 1;
  swz_model_free(m);
  if (swz_model_create("\"missing\"", 1, &m) != SWZ_ERR_CONFIG) return 1;
  if (strlen(swz_last_error()) == 0) return 1;
  printf("ok %s\n", swz_version());
  return 0;
}
