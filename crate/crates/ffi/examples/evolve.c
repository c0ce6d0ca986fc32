/* Evolve a model two steps from its initial marking and print the Born
   probabilities. Usage: evolve <model.json> */
#include <stdio.h>
#include <stdlib.h>

#include "qpn.h"

static char *slurp(const char *path) {
  FILE *f = fopen(path, "rb");
  if (!f) return NULL;
  fseek(f, 0, SEEK_END);
  long n = ftell(f);
  fseek(f, 0, SEEK_SET);
  char *buf = malloc((size_t)n + 1);
  if (buf && fread(buf, 1, (size_t)n, f) != (size_t)n) {
    free(buf);
    buf = NULL;
  }
  if (buf) buf[n] = '\0';
  fclose(f);
  return buf;
}

int main(int argc, char **argv) {
  if (argc != 2) {
    fprintf(stderr, "usage: %s <model.json>\n", argv[0]);
    return 2;
  }
  char *json = slurp(argv[1]);
  if (!json) {
    perror(argv[1]);
    return 2;
  }
  QpnModel *model = NULL;
  QpnStatus st = qpn_model_from_json(json, 100000, &model);
  free(json);
  if (st != QPN_STATUS_OK) {
    char msg[512];
    qpn_last_error(msg, sizeof msg, NULL);
    fprintf(stderr, "error: %s\n", msg);
    return (int)st;
  }
  size_t dim = 0;
  qpn_model_dim(model, &dim);
  QpnState *s0 = NULL, *s2 = NULL;
  qpn_state_initial(model, &s0);
  qpn_evolve(model, s0, 2, &s2);
  double *p = malloc(dim * sizeof *p);
  qpn_state_probabilities(s2, p, dim);
  for (size_t i = 0; i < dim; i++) {
    char name[128];
    qpn_model_marking(model, i, name, sizeof name, NULL);
    printf("%s %.6f\n", name, p[i]);
  }
  free(p);
  qpn_state_free(s0);
  qpn_state_free(s2);
  qpn_model_free(model);
  return 0;
}
