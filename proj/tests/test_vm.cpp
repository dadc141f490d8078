#include "doctest.h"

#include <limits>

#include "support.hpp"
#include "wenort/bench_fixtures.hpp"
#include "wenort/vm.hpp"

using namespace wenort;

namespace {

const ModulePtr& bench() {
    static const ModulePtr m = support::load_or_die("bench_typed.so");
    return m;
}

Program assemble_ok(std::string_view src) {
    auto p = assemble(src);
    REQUIRE_MESSAGE(p.ok(), (p.ok() ? "" : p.error().message));
    return std::move(p).value();
}

std::string assemble_error(std::string_view src) {
    auto p = assemble(src);
    REQUIRE_FALSE(p.ok());
    CHECK(p.error().kind == ErrorKind::VmError);
    return p.error().message;
}

struct Run {
    Result<HostValue> result;
    CallStats stats;
};

Run run(const Program& p, DispatchMode mode, std::vector<HostValue> inputs = {}) {
    Context ctx;
    CallStats stats;
    auto r = execute(ctx, p, bindings_for(*bench()), mode, stats, inputs);
    return {std::move(r), stats};
}

bool contains(const std::string& s, const char* part) { return s.find(part) != std::string::npos; }

} // namespace

TEST_CASE("assembling the shipped fixtures") {
    auto ffi = assemble_ok(fixtures::ffibench);
    CHECK(ffi.call_site_count() == 1);
    CHECK(ffi.native_names == std::vector<std::string>{"inc"});
    CHECK(ffi.local_count == 3);
    CHECK(assemble_ok(fixtures::objbench).call_site_count() == 1);
    CHECK(assemble_ok(fixtures::idbench).call_site_count() == 1);
    CHECK(assemble_ok(fixtures::idbench_exc).native_names == std::vector<std::string>{"id_obj_exc"});
}

TEST_CASE("assembler errors") {
    CHECK(contains(assemble_error(""), "no Return"));
    CHECK(contains(assemble_error("locals 1\n"), "no Return"));

    auto undefined = assemble_error("const 0\nLoadConst 0\nJumpIfFalse nowhere\nLoadConst 0\nReturn\n");
    CHECK(contains(undefined, "nowhere"));
    CHECK(contains(undefined, "line 3"));

    CHECK(contains(assemble_error("Add\nReturn\n"), "line 1"));
    CHECK(contains(assemble_error("const 1\nLoadConst 0\nLoadConst 0\nReturn\n"), "line"));
    CHECK(contains(assemble_error("const 1\nLoadConst 7\nReturn\n"), "line 2"));
    CHECK(contains(assemble_error("Frobnicate\n"), "line 1"));
    CHECK(contains(assemble_error("const \"open\nReturn\n"), "unterminated"));
    CHECK(contains(assemble_error("const 1\nLoadConst 0\nconst 1\nReturn\n"), "line 3"));
}

TEST_CASE("stack depth must agree at join points") {
    // The fallthrough reaches `join` with depth 2, the jump with depth 1.
    const char* src = R"(const 1
        LoadConst 0
        LoadConst 0
        JumpIfFalse join
        LoadConst 0
    join:
        Return
    )";
    assemble_error(src);
}

TEST_CASE("ffibench closed form") {
    auto p = assemble_ok(fixtures::ffibench);
    auto r = run(p, DispatchMode::ForceTyped, {make_int(1000)});
    REQUIRE(r.result.ok());
    CHECK(r.result.value() == make_int(1000));
    CHECK(r.stats.calls == 1000);
    CHECK(r.stats.fast_path_taken == 1000);
    CHECK(r.stats.boxes_allocated == 0);
    CHECK(r.stats.error_checks == 0);

    auto g = run(p, DispatchMode::ForceGeneric, {make_int(1000)});
    REQUIRE(g.result.ok());
    CHECK(g.result.value() == make_int(1000));
    CHECK(g.stats.generic_path_taken == 1000);
    CHECK(g.stats.boxes_allocated >= 1000);
    CHECK(g.stats.error_checks == 1000);
}

TEST_CASE("zero iterations") {
    auto r = run(assemble_ok(fixtures::ffibench), DispatchMode::Auto, {make_int(0)});
    REQUIRE(r.result.ok());
    CHECK(r.result.value() == make_int(0));
    CHECK(r.stats.calls == 0);
}

TEST_CASE("idbench returns the looped-through constant") {
    for (int64_t k : {1, 7, 100}) {
        for (const auto& fixture : {fixtures::idbench, fixtures::idbench_exc}) {
            auto r = run(assemble_ok(fixture), DispatchMode::Auto, {make_int(k)});
            REQUIRE(r.result.ok());
            CHECK(r.result.value() == HostValue::string("s"));
            CHECK(r.stats.calls == static_cast<uint64_t>(k));
        }
    }
}

TEST_CASE("objbench closed form") {
    auto r = run(assemble_ok(fixtures::objbench), DispatchMode::Auto, {make_int(250)});
    REQUIRE(r.result.ok());
    CHECK(r.result.value() == make_int(250));
    CHECK(r.stats.arg_arrays_allocated == 0);
}

TEST_CASE("a raising native call aborts the program") {
    const char* src = R"(const None
        const 0
        locals 1
        LoadConst 0
        CallNative id_obj_exc 1
        StoreLocal 0
        LoadConst 1
        Return
    )";
    auto p = assemble_ok(src);
    for (auto mode : {DispatchMode::Auto, DispatchMode::ForceGeneric, DispatchMode::ForceTyped}) {
        auto r = run(p, mode);
        REQUIRE_FALSE(r.result.ok());
        CHECK(r.result.error().kind == ErrorKind::NativeError);
        CHECK(r.result.error().message == "id_obj_exc: refusing None");
        CHECK(r.stats.calls == 1);
    }
}

TEST_CASE("type misuse inside the VM") {
    const char* src = R"(const "a"
        const 1
        LoadConst 0
        LoadConst 1
        Add
        Return
    )";
    auto r = run(assemble_ok(src), DispatchMode::Auto);
    REQUIRE_FALSE(r.result.ok());
    CHECK(r.result.error().kind == ErrorKind::VmError);
    CHECK(contains(r.result.error().message, "line 5"));
}

TEST_CASE("arithmetic wraps") {
    const char* src = R"(const 9223372036854775807
        const 1
        const -9223372036854775808
        LoadConst 0
        LoadConst 1
        Add
        LoadConst 2
        LoadConst 1
        Sub
        Sub
        Return
    )";
    auto r = run(assemble_ok(src), DispatchMode::Auto);
    REQUIRE(r.result.ok());
    // INT64_MIN - INT64_MAX wraps to 1.
    CHECK(r.result.value() == make_int(1));
}

TEST_CASE("unbound natives and bad inputs") {
    auto p = assemble_ok("const 0\nLoadConst 0\nCallNative nope 1\nReturn\n");
    auto r = run(p, DispatchMode::Auto);
    REQUIRE_FALSE(r.result.ok());
    CHECK(contains(r.result.error().message, "nope"));

    auto too_many = run(assemble_ok(fixtures::ffibench), DispatchMode::Auto,
                        {make_int(1), make_int(2), make_int(3), make_int(4)});
    CHECK_FALSE(too_many.result.ok());
}

TEST_CASE("ForceTyped with an untyped binding fails before running") {
    auto plain = support::load_or_die("bench_plain.so");
    Context ctx;
    CallStats stats;
    const HostValue n = make_int(10);
    auto r = execute(ctx, assemble_ok(fixtures::ffibench), bindings_for(*plain), DispatchMode::ForceTyped, stats,
                     std::span(&n, 1));
    REQUIRE_FALSE(r.ok());
    CHECK(r.error().kind == ErrorKind::VmError);
    CHECK(stats.calls == 0);
}

TEST_CASE("mode invariance and determinism") {
    support::ValueGen gen(41);
    for (const auto& fixture : {fixtures::ffibench, fixtures::objbench, fixtures::idbench, fixtures::idbench_exc}) {
        auto p = assemble_ok(fixture);
        for (int i = 0; i < 5; ++i) {
            const auto n = make_int(static_cast<int64_t>(gen.pick(300)));
            auto a = run(p, DispatchMode::Auto, {n});
            auto g = run(p, DispatchMode::ForceGeneric, {n});
            auto again = run(p, DispatchMode::Auto, {n});
            REQUIRE(a.result.ok());
            CHECK(support::same_outcome(a.result, g.result));
            CHECK(support::same_outcome(a.result, again.result));
            CHECK(a.stats == again.stats);
        }
    }
}
