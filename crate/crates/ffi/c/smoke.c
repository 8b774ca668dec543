#include <math.h>
#include <stdio.h>
#include "willmore.h"

int main(void) {
    WillmoreChart *chart = NULL;
    if (willmore_chart_new("s2xs2", "r1=0.6,r2=0.8", &chart) != WILLMORE_STATUS_OK) {
        char msg[256];
        willmore_last_error(msg, sizeof msg);
        fprintf(stderr, "chart: %s\n", msg);
        return 1;
    }
    double e, ebar, area;
    WillmoreStatus st = willmore_chart_energy(chart, 12, &e, &ebar, &area);
    willmore_chart_free(chart);
    if (st != WILLMORE_STATUS_OK) return 1;

    double t = 0.75, closed;
    if (willmore_family_energy("s2xs2", &t, 1, &closed) != WILLMORE_STATUS_OK) return 1;
    printf("willmore %s: Ebar = %.12g (closed form %.12g)\n", willmore_version(), ebar, closed);

    double bad;
    if (willmore_dilated_energy(-1.0, 32, &bad) != WILLMORE_STATUS_DOMAIN) return 1;
    return fabs(ebar - closed) <= 1e-8 * fabs(closed) ? 0 : 1;
}
