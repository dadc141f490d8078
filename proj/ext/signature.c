/* The minimal one-function extension: inc(x) == x + 1. */
#include "wenort/ext_abi.h"

static abi_long inc_impl(abi_long arg) { return (abi_long)((uint64_t)arg + 1u); }

static abi_object* inc(abi_object* module, abi_object* obj) {
    (void)module;
    abi_long l = abi_long_as_long(obj);
    if (l == -1 && abi_err_occurred()) return NULL;
    return abi_long_from_long(inc_impl(l));
}

SIG(inc, LIST(T_C_LONG), T_C_LONG)
static abi_method_def signature_methods[] = {
    TYPED_SIG(inc, inc, METH_O, "Add one to a long."),
    {NULL, NULL, 0, NULL},
};

static abi_module_def def = {"signature", "doc", signature_methods};

RTEXT_MODINIT(signature) { return &def; }
