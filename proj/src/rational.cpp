#include "crookmap/rational.hpp"

#include <cctype>

namespace crookmap {

std::string rat_str(const Rat& r) {
    if (den(r) == 1) return num(r).str();
    return num(r).str() + "/" + den(r).str();
}

std::optional<Rat> parse_rat(const std::string& s) {
    if (s.empty()) return std::nullopt;
    auto is_int_token = [](const std::string& t) {
        if (t.empty()) return false;
        std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
        if (i == t.size()) return false;
        for (; i < t.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
        return true;
    };
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) {
            if (!is_int_token(s)) return std::nullopt;
            return Rat(Int(s));
        }
        std::string n = s.substr(0, slash);
        std::string d = s.substr(slash + 1);
        if (!is_int_token(n) || !is_int_token(d)) return std::nullopt;
        Int dv(d);
        if (dv == 0) return std::nullopt;
        return Rat(Int(n), dv);
    } catch (...) {
        return std::nullopt;
    }
}

std::string rat_decimal(const Rat& r, int digits) {
    if (digits < 0) digits = 0;
    Int scale = 1;
    for (int i = 0; i < digits; ++i) scale *= 10;
    // Round half away from zero on |r|, reattach the sign.
    Int n = num(r) < 0 ? Int(-num(r)) : num(r);
    Int d = den(r);
    Int scaled = (2 * n * scale + d) / (2 * d);
    Int whole = scaled / scale;
    Int frac = scaled % scale;
    std::string out = (r < 0 && scaled != 0) ? "-" : "";
    out += whole.str();
    if (digits > 0) {
        std::string fs = frac.str();
        out += "." + std::string(digits - fs.size(), '0') + fs;
    }
    return out;
}

}  // namespace crookmap
