#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>
#include <unordered_map>

#include "wenort/vm.hpp"

namespace wenort {

std::string_view to_string(Opcode op) {
    switch (op) {
    case Opcode::LoadConst: return "LoadConst";
    case Opcode::LoadLocal: return "LoadLocal";
    case Opcode::StoreLocal: return "StoreLocal";
    case Opcode::Add: return "Add";
    case Opcode::Sub: return "Sub";
    case Opcode::LessThan: return "LessThan";
    case Opcode::JumpIfFalse: return "JumpIfFalse";
    case Opcode::Jump: return "Jump";
    case Opcode::CallNative: return "CallNative";
    case Opcode::Return: return "Return";
    }
    return "?";
}

std::size_t Program::call_site_count() const {
    std::size_t n = 0;
    for (const auto& ins : code) n += ins.op == Opcode::CallNative;
    return n;
}

namespace {

GuestError asm_error(int line, const std::string& what) {
    return GuestError(ErrorKind::VmError, "line " + std::to_string(line) + ": " + what);
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

struct Token {
    std::string text;
    bool quoted = false;
};

// Splits one line into tokens, dropping a trailing comment. Quoted strings
// become a single token with escapes resolved.
Result<std::vector<Token>> tokenize(std::string_view line, int lineno) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '#') {
            break;
        } else if (c == '"') {
            Token t{"", true};
            ++i;
            bool closed = false;
            while (i < line.size()) {
                char d = line[i++];
                if (d == '"') {
                    closed = true;
                    break;
                }
                if (d == '\\') {
                    if (i == line.size()) break;
                    char e = line[i++];
                    switch (e) {
                    case 'n': t.text += '\n'; break;
                    case 't': t.text += '\t'; break;
                    case '"': t.text += '"'; break;
                    case '\\': t.text += '\\'; break;
                    default: return asm_error(lineno, std::string("unknown escape \\") + e);
                    }
                } else {
                    t.text += d;
                }
            }
            if (!closed) return asm_error(lineno, "unterminated string literal");
            out.push_back(std::move(t));
        } else {
            std::size_t start = i;
            while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) && line[i] != '#') ++i;
            out.push_back(Token{std::string(line.substr(start, i - start)), false});
        }
    }
    return out;
}

std::optional<int64_t> parse_int(const std::string& s) {
    int64_t v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
    return v;
}

Result<HostValue> parse_literal(const Token& t, int lineno) {
    if (t.quoted) return HostValue::string(t.text);
    if (t.text == "None") return HostValue::none();
    if (auto v = parse_int(t.text)) return make_int(*v);
    return asm_error(lineno, "invalid constant literal '" + t.text + "'");
}

Result<int32_t> parse_index(const Token& t, int lineno, const char* what) {
    auto v = parse_int(t.text);
    if (t.quoted || !v || *v < 0 || *v > INT32_MAX)
        return asm_error(lineno, std::string("expected ") + what + ", got '" + t.text + "'");
    return static_cast<int32_t>(*v);
}

const std::unordered_map<std::string_view, Opcode>& mnemonics() {
    static const std::unordered_map<std::string_view, Opcode> table = {
        {"LoadConst", Opcode::LoadConst}, {"LoadLocal", Opcode::LoadLocal},
        {"StoreLocal", Opcode::StoreLocal}, {"Add", Opcode::Add},
        {"Sub", Opcode::Sub}, {"LessThan", Opcode::LessThan},
        {"JumpIfFalse", Opcode::JumpIfFalse}, {"Jump", Opcode::Jump},
        {"CallNative", Opcode::CallNative}, {"Return", Opcode::Return},
    };
    return table;
}

std::size_t operand_count(Opcode op) {
    switch (op) {
    case Opcode::LoadConst:
    case Opcode::LoadLocal:
    case Opcode::StoreLocal:
    case Opcode::JumpIfFalse:
    case Opcode::Jump: return 1;
    case Opcode::CallNative: return 2;
    default: return 0;
    }
}

// Abstract interpretation over stack depth: every path must agree on the
// depth at each instruction, never underflow, and reach Return with exactly
// one value.
Status check_stack(Program& p) {
    const std::size_t n = p.code.size();
    std::vector<int64_t> depth(n, -1);
    std::vector<std::size_t> work{0};
    depth[0] = 0;
    int64_t max_depth = 0;

    auto flow = [&](std::size_t from, std::size_t to, int64_t d) -> Status {
        if (to >= n) return asm_error(p.lines[from], "control reaches the end of the code without Return");
        if (depth[to] == -1) {
            depth[to] = d;
            work.push_back(to);
        } else if (depth[to] != d) {
            return asm_error(p.lines[to], "stack imbalance: depth " + std::to_string(depth[to]) +
                                              " on one path, " + std::to_string(d) + " on another");
        }
        return success();
    };

    while (!work.empty()) {
        const std::size_t pc = work.back();
        work.pop_back();
        const Instruction& ins = p.code[pc];
        const int64_t d = depth[pc];
        const int line = p.lines[pc];

        auto need = [&](int64_t k) -> Status {
            if (d < k)
                return asm_error(line, std::string("stack underflow: ") + std::string(to_string(ins.op)) +
                                           " needs " + std::to_string(k) + " value(s), stack has " +
                                           std::to_string(d));
            return success();
        };

        Status st = success();
        switch (ins.op) {
        case Opcode::LoadConst:
        case Opcode::LoadLocal:
            max_depth = std::max(max_depth, d + 1);
            st = flow(pc, pc + 1, d + 1);
            break;
        case Opcode::StoreLocal:
            if (st = need(1); st) st = flow(pc, pc + 1, d - 1);
            break;
        case Opcode::Add:
        case Opcode::Sub:
        case Opcode::LessThan:
            if (st = need(2); st) st = flow(pc, pc + 1, d - 1);
            break;
        case Opcode::JumpIfFalse:
            if (st = need(1); st) st = flow(pc, static_cast<std::size_t>(ins.a), d - 1);
            if (st) st = flow(pc, pc + 1, d - 1);
            break;
        case Opcode::Jump:
            st = flow(pc, static_cast<std::size_t>(ins.a), d);
            break;
        case Opcode::CallNative:
            if (st = need(ins.b); st) {
                max_depth = std::max(max_depth, d - ins.b + 1);
                st = flow(pc, pc + 1, d - ins.b + 1);
            }
            break;
        case Opcode::Return:
            if (d != 1)
                st = asm_error(line, "stack imbalance: Return with " + std::to_string(d) +
                                         " value(s) on the stack, expected exactly 1");
            break;
        }
        if (!st) return st;
    }
    p.max_stack = static_cast<std::size_t>(max_depth);
    return success();
}

} // namespace

Result<Program> assemble(std::string_view source) {
    Program p;
    bool locals_seen = false;
    std::unordered_map<std::string, std::size_t> labels;
    struct Fixup {
        std::size_t pc;
        std::string label;
        int line;
    };
    std::vector<Fixup> fixups;
    std::unordered_map<std::string, int32_t> native_index;

    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= source.size()) {
        std::size_t eol = source.find('\n', pos);
        if (eol == std::string_view::npos) eol = source.size();
        std::string_view line = source.substr(pos, eol - pos);
        pos = eol + 1;
        ++lineno;

        auto toks = tokenize(line, lineno);
        if (!toks) return std::move(toks).error();
        std::vector<Token>& t = toks.value();
        if (t.empty()) continue;

        // Leading label, either alone or in front of an instruction.
        if (!t[0].quoted && t[0].text.size() > 1 && t[0].text.back() == ':') {
            std::string label = t[0].text.substr(0, t[0].text.size() - 1);
            if (!is_ident_start(label[0]) ||
                !std::all_of(label.begin(), label.end(), is_ident_char))
                return asm_error(lineno, "invalid label name '" + label + "'");
            if (!labels.emplace(label, p.code.size()).second)
                return asm_error(lineno, "duplicate label '" + label + "'");
            t.erase(t.begin());
            if (t.empty()) continue;
        }

        const std::string& head = t[0].text;
        if (!t[0].quoted && (head == "const" || head == "locals")) {
            if (!p.code.empty()) return asm_error(lineno, "'" + head + "' must appear before the first instruction");
            if (t.size() != 2) return asm_error(lineno, "'" + head + "' takes exactly one operand");
            if (head == "const") {
                auto v = parse_literal(t[1], lineno);
                if (!v) return std::move(v).error();
                p.constants.push_back(std::move(v.value()));
            } else {
                if (locals_seen) return asm_error(lineno, "duplicate 'locals' declaration");
                auto n = parse_index(t[1], lineno, "a local count");
                if (!n) return std::move(n).error();
                p.local_count = static_cast<std::size_t>(n.value());
                locals_seen = true;
            }
            continue;
        }

        auto it = t[0].quoted ? mnemonics().end() : mnemonics().find(head);
        if (it == mnemonics().end()) return asm_error(lineno, "unknown instruction '" + head + "'");
        const Opcode op = it->second;
        if (t.size() - 1 != operand_count(op))
            return asm_error(lineno, std::string(to_string(op)) + " takes " + std::to_string(operand_count(op)) +
                                         " operand(s), got " + std::to_string(t.size() - 1));

        Instruction ins{op};
        switch (op) {
        case Opcode::LoadConst: {
            auto k = parse_index(t[1], lineno, "a constant index");
            if (!k) return std::move(k).error();
            if (static_cast<std::size_t>(k.value()) >= p.constants.size())
                return asm_error(lineno, "constant index " + t[1].text + " out of range");
            ins.a = k.value();
            break;
        }
        case Opcode::LoadLocal:
        case Opcode::StoreLocal: {
            auto k = parse_index(t[1], lineno, "a local index");
            if (!k) return std::move(k).error();
            if (static_cast<std::size_t>(k.value()) >= p.local_count)
                return asm_error(lineno, "local index " + t[1].text + " out of range");
            ins.a = k.value();
            break;
        }
        case Opcode::JumpIfFalse:
        case Opcode::Jump:
            if (t[1].quoted) return asm_error(lineno, "expected a label");
            fixups.push_back({p.code.size(), t[1].text, lineno});
            break;
        case Opcode::CallNative: {
            if (t[1].quoted) return asm_error(lineno, "expected a function name");
            auto n = parse_index(t[2], lineno, "an argument count");
            if (!n) return std::move(n).error();
            auto [slot, inserted] = native_index.try_emplace(t[1].text, static_cast<int32_t>(p.native_names.size()));
            if (inserted) p.native_names.push_back(t[1].text);
            ins.a = slot->second;
            ins.b = n.value();
            break;
        }
        default: break;
        }
        p.code.push_back(ins);
        p.lines.push_back(lineno);
    }

    if (std::none_of(p.code.begin(), p.code.end(), [](const Instruction& i) { return i.op == Opcode::Return; }))
        return asm_error(lineno, "no Return");

    for (const auto& f : fixups) {
        auto it = labels.find(f.label);
        if (it == labels.end()) return asm_error(f.line, "undefined label '" + f.label + "'");
        if (it->second >= p.code.size())
            return asm_error(f.line, "label '" + f.label + "' does not precede an instruction");
        p.code[f.pc].a = static_cast<int32_t>(it->second);
    }

    if (auto st = check_stack(p); !st) return st.error();
    return p;
}

} // namespace wenort
