#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wenort/context.hpp"
#include "wenort/dispatch.hpp"
#include "wenort/value.hpp"

namespace wenort {

struct Module;

enum class Opcode : uint8_t {
    LoadConst,   // a = constant index
    LoadLocal,   // a = local index
    StoreLocal,  // a = local index
    Add,
    Sub,
    LessThan,
    JumpIfFalse, // a = target
    Jump,        // a = target
    CallNative,  // a = call-site name index, b = argument count
    Return,
};

std::string_view to_string(Opcode op);

struct Instruction {
    Opcode op;
    int32_t a = 0;
    int32_t b = 0;
};

/// An assembled guest program. Jump targets are in range and the operand
/// stack is proven balanced.
struct Program {
    std::vector<HostValue> constants;
    std::vector<Instruction> code;
    std::vector<int> lines; // source line per instruction
    std::size_t local_count = 0;
    std::vector<std::string> native_names; // indexed by CallNative's a
    std::size_t max_stack = 0;

    std::size_t call_site_count() const;
};

/// Parses the textual assembly format:
///
///     # comment
///     const 0            header: constant pool entries (int, "string", None)
///     locals 3           header: number of local slots
///     loop:              label
///         LoadLocal 1
///         JumpIfFalse done
///         CallNative inc 1
///     done:
///         Return
///
/// Errors carry the offending line number.
Result<Program> assemble(std::string_view source);

using Bindings = std::map<std::string, const FunctionObject*, std::less<>>;

Bindings bindings_for(const Module& module);

/// Runs `program` to its Return. `inputs` seed the first locals; the rest
/// start as None. Every CallNative goes through call_function. The first
/// GuestError aborts the run and is returned.
Result<HostValue> execute(Context& ctx, const Program& program, const Bindings& bindings,
                          DispatchMode mode, CallStats& stats,
                          std::span<const HostValue> inputs = {});

} // namespace wenort
