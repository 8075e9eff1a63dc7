#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "thermoform/errors.hpp"
#include "thermoform/interval_map.hpp"
#include "thermoform/potential.hpp"

namespace thermoform {

namespace detail {

inline double parse_number(std::string_view token, const std::string& context) {
    double v = 0.0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
        throw ParseError(context + ": bad number '" + std::string(token) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

} // namespace detail

/// Map mini-language: cheb2 | cheb3 | quad:a | poly:[a,b]:c0,c1,...
inline IntervalMap parse_map_spec(const std::string& spec) {
    if (spec == "cheb2") return IntervalMap::chebyshev2();
    if (spec == "cheb3") return IntervalMap::chebyshev3();
    std::string_view s(spec);
    if (s.rfind("quad:", 0) == 0)
        return IntervalMap::quadratic(detail::parse_number(s.substr(5), "quad parameter"));
    if (s.rfind("poly:", 0) == 0) {
        std::string_view rest = s.substr(5);
        if (rest.empty() || rest.front() != '[')
            throw ParseError("poly map: expected '[a,b]' domain, got '" + std::string(rest) + "'");
        auto close = rest.find(']');
        if (close == std::string_view::npos)
            throw ParseError("poly map: unterminated domain bracket");
        auto dom = detail::split(rest.substr(1, close - 1), ',');
        if (dom.size() != 2) throw ParseError("poly map: domain needs two endpoints");
        double lo = detail::parse_number(dom[0], "poly domain");
        double hi = detail::parse_number(dom[1], "poly domain");
        if (close + 1 >= rest.size() || rest[close + 1] != ':')
            throw ParseError("poly map: expected ':' after the domain");
        std::vector<double> coeffs;
        for (auto tok : detail::split(rest.substr(close + 2), ','))
            coeffs.push_back(detail::parse_number(tok, "poly coefficient"));
        if (coeffs.empty()) throw ParseError("poly map: no coefficients");
        return IntervalMap(Polynomial(std::move(coeffs)), {lo, hi}, spec);
    }
    throw ParseError("unknown map spec '" + spec + "'");
}

/// Potential mini-language: const:c | cos:a | poly:c0,c1,... | geom:t[:base]
inline Potential parse_potential_spec(const std::string& spec, const IntervalMap& map) {
    std::string_view s(spec);
    if (s.rfind("const:", 0) == 0)
        return Potential::constant(detail::parse_number(s.substr(6), "const potential"));
    if (s.rfind("cos:", 0) == 0)
        return Potential::cosine(detail::parse_number(s.substr(4), "cos potential"),
                                 map.domain());
    if (s.rfind("poly:", 0) == 0) {
        std::vector<double> coeffs;
        for (auto tok : detail::split(s.substr(5), ','))
            coeffs.push_back(detail::parse_number(tok, "poly potential coefficient"));
        if (coeffs.empty()) throw ParseError("poly potential: no coefficients");
        return Potential::polynomial(Polynomial(std::move(coeffs)), map.domain());
    }
    if (s.rfind("geom:", 0) == 0) {
        std::string_view rest = s.substr(5);
        auto colon = rest.find(':');
        double t;
        Potential base = Potential::constant(0.0);
        if (colon == std::string_view::npos) {
            t = detail::parse_number(rest, "geom parameter");
        } else {
            t = detail::parse_number(rest.substr(0, colon), "geom parameter");
            base = parse_potential_spec(std::string(rest.substr(colon + 1)), map);
        }
        return Potential::geometric(std::move(base), t, map);
    }
    throw ParseError("unknown potential spec '" + spec + "'");
}

} // namespace thermoform
