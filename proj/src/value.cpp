#include "wenort/value.hpp"

#include <cassert>

namespace wenort {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::TypeError: return "TypeError";
    case ErrorKind::ArityError: return "ArityError";
    case ErrorKind::NativeError: return "NativeError";
    case ErrorKind::LoadError: return "LoadError";
    case ErrorKind::VmError: return "VmError";
    }
    return "UnknownError";
}

GuestError::GuestError(ErrorKind k, std::string msg) : kind(k), message(std::move(msg)) {
    if (message.empty()) message = std::string(to_string(kind));
}

std::string_view to_string(TypeCode code) {
    switch (code) {
    case TypeCode::CLong: return "T_C_LONG";
    case TypeCode::Object: return "T_OBJECT";
    }
    return "T_<invalid>";
}

std::string_view to_string(Convention c) {
    return c == Convention::MethO ? "METH_O" : "METH_FASTCALL";
}

HostValue HostValue::string(std::string s) {
    HostValue h;
    h.tag_ = Tag::Str;
    h.bits_.str = new StrObject{{1}, {}, std::move(s)};
    return h;
}

std::string HostValue::repr() const {
    switch (tag()) {
    case Tag::Int: return std::to_string(as_int());
    case Tag::Str: {
        std::string out = "\"";
        for (char c : as_str()) {
            if (c == '"' || c == '\\') out += '\\';
            out += c;
        }
        return out + "\"";
    }
    case Tag::None: return "None";
    case Tag::NativeFunction: return "<native function " + as_function().name + ">";
    }
    return "?";
}

bool operator==(const HostValue& a, const HostValue& b) {
    if (a.tag_ != b.tag_) return false;
    switch (a.tag()) {
    case HostValue::Tag::Int: return a.as_int() == b.as_int();
    case HostValue::Tag::Str: return a.as_str() == b.as_str();
    case HostValue::Tag::None: return true;
    case HostValue::Tag::NativeFunction: return &a.as_function() == &b.as_function();
    }
    return false;
}

TypeCode host_type_code(const HostValue& v) noexcept {
    return v.is_int() ? TypeCode::CLong : TypeCode::Object;
}

} // namespace wenort
