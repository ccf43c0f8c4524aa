/* Certifies the reference gain on the four-agent data set and synthesizes
 * a gain of its own. Prints the closed-loop radii of both. */
#include <stdio.h>
#include "netsync.h"

static int check(NsStatus s) {
    if (s != NS_STATUS_OK) {
        fprintf(stderr, "status %d: %s\n", (int)s, ns_last_error());
        return 1;
    }
    return 0;
}

int main(void) {
    const double c[16] = {1, -1, 0, 0, -1, 3, -1, -1, 0, -1, 2, -1, 0, -1, -1, 2};
    const double u[8] = {1, -1, -1, -1, -1, 1, 1, 1};
    const double x[15] = {1, 1, 3, 4, 5, 0, 2, 1, 1, 2, 1, 0, 1, 2, 3};
    const double k[6] = {1.0 / 12, 0.5, 41.0 / 36, -1.0 / 12, -0.5, -41.0 / 36};
    NsSpectrum *sigma = NULL;
    NsData *data = NULL;
    NsCertificate *cert = NULL;
    NsCertificate *found = NULL;
    double radii[3];
    size_t rank_x = 0, rank_s = 0;

    if (check(ns_spectrum_validate(c, 4, 0.0, &sigma))) return 1;
    if (check(ns_data_new(u, 2, x, 3, 4, &data))) return 1;
    if (check(ns_data_rank(data, &rank_x, &rank_s))) return 1;
    printf("rank X- = %zu, rank [X-; U-] = %zu\n", rank_x, rank_s);

    if (check(ns_verify_certificate(data, sigma, k, 0.0, 0.0, &cert))) return 1;
    if (check(ns_certificate_radii(cert, radii, 3))) return 1;
    printf("reference radii %.6f %.6f %.6f\n", radii[0], radii[1], radii[2]);

    if (check(ns_synthesize_gain(data, sigma, 0.0, false, &found))) return 1;
    if (check(ns_certificate_radii(found, radii, 3))) return 1;
    printf("synthesized radii %.6f %.6f %.6f\n", radii[0], radii[1], radii[2]);

    ns_certificate_free(found);
    ns_certificate_free(cert);
    ns_data_free(data);
    ns_spectrum_free(sigma);
    return 0;
}
