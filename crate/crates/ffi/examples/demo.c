/* Certifies the shipped bound entangled circuit through the C ABI. */
#include <stdio.h>
#include "becv.h"

#define CHECK(call)                                                   \
    do {                                                              \
        BecvStatus s_ = (call);                                       \
        if (s_ != BECV_STATUS_OK) {                                   \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_,   \
                    becv_last_error());                               \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    BecvCircuit *circuit = NULL;
    BecvState *state = NULL;
    BecvPartition *partition = NULL;
    BecvReport *report = NULL;

    CHECK(becv_circuit_preset(BECV_PRESET_BOUND_STATE, &circuit));
    CHECK(becv_circuit_simulate(circuit, &state));
    CHECK(becv_circuit_partition(circuit, &partition));
    CHECK(becv_certify(state, partition, 0.0, 0, &report));

    printf("version %s\n", becv_version());
    printf("E %.6f\n", becv_report_entanglement(report));
    printf("P %.6f\n", becv_report_ppt_margin(report));
    printf("class %s\n", becv_report_classification(report));

    /* Errors come back as status codes with a message. */
    BecvPartition *bad = NULL;
    BecvStatus s = becv_partition_parse("1,2", 4, &bad);
    printf("bad partition status %d: %s\n", (int)s, becv_last_error());

    becv_report_free(report);
    becv_partition_free(partition);
    becv_state_free(state);
    becv_circuit_free(circuit);
    return s == BECV_STATUS_INVALID_ARGUMENT ? 0 : 1;
}
