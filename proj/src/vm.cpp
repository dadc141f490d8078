#include "wenort/vm.hpp"

#include "wenort/loader.hpp"

namespace wenort {

Bindings bindings_for(const Module& module) {
    Bindings b;
    for (const auto& [name, fn] : module.functions) b.emplace(name, &fn);
    return b;
}

namespace {

GuestError vm_error(const Program& p, std::size_t pc, const std::string& what) {
    return GuestError(ErrorKind::VmError, "line " + std::to_string(p.lines[pc]) + ": " + what);
}

bool truthy(const HostValue& v) {
    switch (v.tag()) {
    case HostValue::Tag::Int: return v.as_int() != 0;
    case HostValue::Tag::Str: return !v.as_str().empty();
    case HostValue::Tag::None: return false;
    case HostValue::Tag::NativeFunction: return true;
    }
    return false;
}

int64_t wrapping_add(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) + static_cast<uint64_t>(b));
}

int64_t wrapping_sub(int64_t a, int64_t b) {
    return static_cast<int64_t>(static_cast<uint64_t>(a) - static_cast<uint64_t>(b));
}

} // namespace

Result<HostValue> execute(Context& ctx, const Program& program, const Bindings& bindings,
                          DispatchMode mode, CallStats& stats, std::span<const HostValue> inputs) {
    std::vector<const FunctionObject*> natives;
    natives.reserve(program.native_names.size());
    for (const auto& name : program.native_names) {
        auto it = bindings.find(name);
        if (it == bindings.end() || it->second == nullptr)
            return GuestError(ErrorKind::VmError, "unbound native function '" + name + "'");
        if (auto err = check_mode(*it->second, mode)) return *err;
        natives.push_back(it->second);
    }
    if (inputs.size() > program.local_count)
        return GuestError(ErrorKind::VmError, std::to_string(inputs.size()) + " inputs for " +
                                                  std::to_string(program.local_count) + " locals");

    std::vector<HostValue> locals(program.local_count);
    std::copy(inputs.begin(), inputs.end(), locals.begin());
    std::vector<HostValue> stack(program.max_stack);
    std::size_t sp = 0;

    ContextScope bound(ctx);
    const Instruction* code = program.code.data();
    std::size_t pc = 0;
    for (;;) {
        const Instruction& ins = code[pc];
        switch (ins.op) {
        case Opcode::LoadConst:
            stack[sp++] = program.constants[ins.a];
            ++pc;
            break;
        case Opcode::LoadLocal:
            stack[sp++] = locals[ins.a];
            ++pc;
            break;
        case Opcode::StoreLocal:
            locals[ins.a] = std::move(stack[--sp]);
            ++pc;
            break;
        case Opcode::Add:
        case Opcode::Sub:
        case Opcode::LessThan: {
            const HostValue& lhs = stack[sp - 2];
            const HostValue& rhs = stack[sp - 1];
            if (!lhs.is_int() || !rhs.is_int())
                return vm_error(program, pc, std::string(to_string(ins.op)) + " requires Int operands, got " +
                                                 lhs.repr() + " and " + rhs.repr());
            const int64_t a = lhs.as_int(), b = rhs.as_int();
            const int64_t r = ins.op == Opcode::Add   ? wrapping_add(a, b)
                              : ins.op == Opcode::Sub ? wrapping_sub(a, b)
                                                      : int64_t{a < b};
            --sp;
            stack[sp - 1] = make_int(r);
            ++pc;
            break;
        }
        case Opcode::JumpIfFalse:
            pc = truthy(stack[--sp]) ? pc + 1 : static_cast<std::size_t>(ins.a);
            break;
        case Opcode::Jump:
            pc = static_cast<std::size_t>(ins.a);
            break;
        case Opcode::CallNative: {
            const std::size_t n = static_cast<std::size_t>(ins.b);
            const std::size_t base = sp - n;
            auto result = call_function(ctx, *natives[ins.a], std::span<const HostValue>(&stack[base], n), mode, stats);
            if (!result) return std::move(result).error();
            stack[base] = std::move(result.value());
            sp = base + 1;
            ++pc;
            break;
        }
        case Opcode::Return:
            return std::move(stack[sp - 1]);
        }
    }
}

} // namespace wenort
