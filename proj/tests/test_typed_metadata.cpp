#include "doctest.h"

#include <climits>

#include "support.hpp"

using namespace wenort;

namespace {

abi_long inc_impl(abi_long a) { return a + 1; }
abi_object* inc_wrapper(abi_object*, abi_object* o) { return o; }

int inc_arg_types[] = {T_C_LONG, T_END_OF_ARGS};
abi_typed_method_metadata inc_sig = {inc_arg_types, T_C_LONG, reinterpret_cast<void*>(&inc_impl), "inc"};

} // namespace

TEST_CASE("decode_ret_type") {
    CHECK(decode_ret_type(T_C_LONG).value() == DecodedReturn{TypeCode::CLong, false});
    CHECK(decode_ret_type(-T_OBJECT).value() == DecodedReturn{TypeCode::Object, true});
    CHECK(decode_ret_type(-T_C_LONG).value() == DecodedReturn{TypeCode::CLong, true});
    CHECK(decode_ret_type(T_OBJECT).value() == DecodedReturn{TypeCode::Object, false});

    auto zero = decode_ret_type(0);
    REQUIRE_FALSE(zero.ok());
    CHECK(zero.error().kind == ErrorKind::LoadError);
    CHECK_FALSE(decode_ret_type(INT_MIN).ok());
}

TEST_CASE("typed_metadata_of the inc row") {
    abi_method_def row{inc_sig.ml_name, reinterpret_cast<void*>(&inc_wrapper), METH_O | METH_TYPED, nullptr};
    auto sig = typed_metadata_of(row);
    REQUIRE(sig.ok());
    REQUIRE(sig.value().has_value());
    const TypedSignature& s = *sig.value();
    CHECK(s.arg_types == std::vector<TypeCode>{TypeCode::CLong});
    CHECK(s.ret_type == TypeCode::CLong);
    CHECK_FALSE(s.can_raise);
    CHECK(s.underlying_entry == reinterpret_cast<void*>(&inc_impl));
    CHECK(s.name == row.ml_name);
    CHECK(metadata_from_name(row.ml_name) == &inc_sig);
}

TEST_CASE("rows without METH_TYPED have no signature") {
    abi_method_def plain{"inc", reinterpret_cast<void*>(&inc_wrapper), METH_O, nullptr};
    auto sig = typed_metadata_of(plain);
    REQUIRE(sig.ok());
    CHECK_FALSE(sig.value().has_value());

    // Even when ml_name happens to sit inside a metadata struct.
    abi_method_def pointing{inc_sig.ml_name, reinterpret_cast<void*>(&inc_wrapper), METH_FASTCALL, nullptr};
    sig = typed_metadata_of(pointing);
    REQUIRE(sig.ok());
    CHECK_FALSE(sig.value().has_value());
}

TEST_CASE("offset trick round trip") {
    support::ValueGen gen(21);
    static int long_args[] = {T_C_LONG, T_END_OF_ARGS};
    static int obj_args[] = {T_OBJECT, T_END_OF_ARGS};
    for (int i = 0; i < 100; ++i) {
        std::string name(1 + gen.pick(99), 'x');
        for (auto& c : name) c = static_cast<char>('a' + gen.pick(26));
        int* args = gen.pick(2) ? long_args : obj_args;
        const int ret = (gen.pick(2) ? 1 : -1) * (gen.pick(2) ? T_C_LONG : T_OBJECT);
        void* entry = reinterpret_cast<void*>(static_cast<uintptr_t>(0x1000 + 16 * gen.pick(1 << 20)));
        auto m = support::make_metadata(args, ret, entry, name);

        CHECK(metadata_from_name(m->ml_name) == m.get());
        abi_method_def row{m->ml_name, reinterpret_cast<void*>(&inc_wrapper), METH_O | METH_TYPED, nullptr};
        auto sig = typed_metadata_of(row);
        REQUIRE(sig.ok());
        REQUIRE(sig.value().has_value());
        CHECK(sig.value()->arg_types.size() == 1);
        CHECK(static_cast<int>(sig.value()->arg_types[0]) == args[0]);
        CHECK(static_cast<int>(sig.value()->ret_type) == (ret < 0 ? -ret : ret));
        CHECK(sig.value()->can_raise == (ret < 0));
        CHECK(sig.value()->underlying_entry == entry);
        CHECK(std::string(sig.value()->name) == name);
    }
}

TEST_CASE("malformed metadata is a load error") {
    static int long_args[] = {T_C_LONG, T_END_OF_ARGS};
    auto expect_error = [](const abi_method_def& row, const char* fragment) {
        auto sig = typed_metadata_of(row);
        REQUIRE_FALSE(sig.ok());
        CHECK(sig.error().kind == ErrorKind::LoadError);
        CHECK_MESSAGE(sig.error().message.find(fragment) != std::string::npos, sig.error().message);
    };
    void* wrapper = reinterpret_cast<void*>(&inc_wrapper);

    SUBCASE("zero return code") {
        auto m = support::make_metadata(long_args, 0, reinterpret_cast<void*>(&inc_impl), "f");
        expect_error({m->ml_name, wrapper, METH_O | METH_TYPED, nullptr}, "zero return type");
    }
    SUBCASE("null argument list") {
        auto m = support::make_metadata(nullptr, T_C_LONG, reinterpret_cast<void*>(&inc_impl), "f");
        expect_error({m->ml_name, wrapper, METH_O | METH_TYPED, nullptr}, "argument");
    }
    SUBCASE("unterminated argument list") {
        static int endless[kMaxDecodedArgs + 1];
        std::fill(std::begin(endless), std::end(endless), T_C_LONG);
        auto m = support::make_metadata(endless, T_C_LONG, reinterpret_cast<void*>(&inc_impl), "f");
        expect_error({m->ml_name, wrapper, METH_O | METH_TYPED, nullptr}, "terminated");
    }
    SUBCASE("name fills the whole buffer") {
        auto m = support::make_metadata(long_args, T_C_LONG, reinterpret_cast<void*>(&inc_impl),
                                        std::string(ABI_TYPED_NAME_SIZE, 'n'));
        expect_error({m->ml_name, wrapper, METH_O | METH_TYPED, nullptr}, "too long");
    }
}
