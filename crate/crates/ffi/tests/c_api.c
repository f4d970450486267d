#include <math.h>
#include <stdio.h>
#include "qnormal3d.h"

int main(void) {
    QnModel *m = NULL;
    if (qn_model_new(0.3, 0.4, 0.5, 0.5, &m) != QN_STATUS_OK) {
        return 1;
    }
    double a = 0.0, b = 0.0;
    qn_model_f3d(m, 0.1, -0.2, 0.3, QN_DENSITY_FORM_PRODUCT, &a);
    qn_model_f3d(m, 0.1, -0.2, 0.3, QN_DENSITY_FORM_CLOSED, &b);
    int rc = fabs(a - b) < 1e-8 * fabs(a) ? 0 : 2;
    QnModel *bad = NULL;
    if (qn_model_new(0.3, 0.4, 0.5, 1.5, &bad) != QN_STATUS_INVALID_PARAMETER || bad != NULL) {
        rc = 3;
    }
    if (qn_last_error_message() == NULL) {
        rc = 4;
    }
    qn_model_free(m);
    printf("%.17g\n", a);
    return rc;
}
