/*
 * The four microbenchmark functions. Each has an argument-processing
 * wrapper (what a runtime without typed metadata calls) and an _impl that
 * works on unboxed values (what the typed path calls).
 */
#include "wenort/ext_abi.h"

/* inc: METH_O, long -> long, cannot raise. */

static abi_long inc_impl(abi_long arg) { return (abi_long)((uint64_t)arg + 1u); }

static abi_object* inc(abi_object* module, abi_object* obj) {
    (void)module;
    abi_long l = abi_long_as_long(obj);
    if (l == -1 && abi_err_occurred()) return NULL;
    return abi_long_from_long(inc_impl(l));
}

/* add_long_fast: METH_FASTCALL, (object, long) -> long, cannot raise.
 * The object is only touched, so it costs a box but never changes the
 * result. */

static abi_long add_long_fast_impl(abi_object* obj, abi_long l) {
    volatile int32_t touched = obj->ob_type;
    (void)touched;
    return (abi_long)((uint64_t)l + 1u);
}

static abi_object* add_long_fast(abi_object* module, abi_object* const* args, intptr_t nargs) {
    (void)module;
    if (nargs != 2) {
        abi_err_set("add_long_fast expected 2 arguments");
        return NULL;
    }
    abi_long l = abi_long_as_long(args[1]);
    if (l == -1 && abi_err_occurred()) return NULL;
    return abi_long_from_long(add_long_fast_impl(args[0], l));
}

/* id_obj: METH_O, object -> object, cannot raise. */

static abi_object* id_obj_impl(abi_object* obj) {
    ABI_INCREF(obj);
    return obj;
}

static abi_object* id_obj(abi_object* module, abi_object* obj) {
    (void)module;
    return id_obj_impl(obj);
}

/* id_obj_exc: METH_O, object -> object, raises on None. */

static abi_object* id_obj_exc_impl(abi_object* obj) {
    if (obj->ob_type == ABI_TYPE_NONE) {
        abi_err_set("id_obj_exc: refusing None");
        return NULL;
    }
    ABI_INCREF(obj);
    return obj;
}

static abi_object* id_obj_exc(abi_object* module, abi_object* obj) {
    (void)module;
    return id_obj_exc_impl(obj);
}

SIG(inc, LIST(T_C_LONG), T_C_LONG)
SIG(add_long_fast, LIST(T_OBJECT, T_C_LONG), T_C_LONG)
SIG(id_obj, LIST(T_OBJECT), T_OBJECT)
SIG(id_obj_exc, LIST(T_OBJECT), -T_OBJECT)

static abi_method_def bench_methods[] = {
    TYPED_SIG(inc, inc, METH_O, "Add one to a long."),
    TYPED_SIG(add_long_fast, add_long_fast, METH_FASTCALL, "Add one to the second argument."),
    TYPED_SIG(id_obj, id_obj, METH_O, "Return the argument."),
    TYPED_SIG(id_obj_exc, id_obj_exc, METH_O, "Return the argument; raise on None."),
    {NULL, NULL, 0, NULL},
};

static abi_module_def def = {"bench", "Call-overhead microbenchmark functions.", bench_methods};

RTEXT_MODINIT(bench) { return &def; }
