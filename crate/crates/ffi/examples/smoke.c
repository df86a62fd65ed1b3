#include <math.h>
#include <stdio.h>
#include "mes.h"

static int32_t below_zero(void *user_data, const double *x, uintptr_t dim) {
  (void)user_data;
  (void)dim;
  return x[0] <= 0.0;
}

int main(void) {
  uintptr_t n = 0;
  if (mes_sample_size(0.025, 0.05, 300, &n) != MES_STATUS_OK || n != 129099) {
    fprintf(stderr, "sample size: %s\n", mes_last_error_message());
    return 1;
  }

  MesBlackBox *model = NULL;
  MesDensity *density = NULL;
  MesTables *tables = NULL;
  if (mes_callback_model_new(below_zero, NULL, 1, true, &model) != MES_STATUS_OK ||
      mes_density_gaussian_new(1, 7, &density) != MES_STATUS_OK ||
      mes_tables_build_axis(model, density, 0.1, 0.05, false, &tables) != MES_STATUS_OK) {
    fprintf(stderr, "setup: %s\n", mes_last_error_message());
    return 1;
  }

  double x[1] = {-1.0};
  MesExplanation e;
  if (mes_explain(tables, x, 1, &e) != MES_STATUS_OK) {
    fprintf(stderr, "explain: %s\n", mes_last_error_message());
    return 1;
  }
  printf("family %lld direction %d threshold %g score %g\n", (long long)e.family_index, e.direction,
         e.threshold, e.score);

  mes_tables_free(tables);
  mes_density_free(density);
  mes_blackbox_free(model);
  return (e.family_index == 0 && fabs(e.threshold) < 0.1 && e.score > 0.9) ? 0 : 1;
}
