#include "wenort/ext_abi.h"

static abi_method_def methods[] = {
    {NULL, NULL, 0, NULL},
};

static abi_module_def def = {"two_inits", NULL, methods};

RTEXT_MODINIT(first) { return &def; }
RTEXT_MODINIT(second) { return &def; }
