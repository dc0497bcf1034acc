#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>

namespace kp2 {

using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class TruncationMismatch : public Error {
  public:
    TruncationMismatch() : Error("operands built over different truncations") {}
};

class DomainError : public Error {
  public:
    explicit DomainError(const std::string& what) : Error(what) {}
};

// Input outside the class the truncated model supports (see module notes).
class UnsupportedInput : public Error {
  public:
    explicit UnsupportedInput(const std::string& what) : Error(what) {}
};

class SingularSystem : public Error {
  public:
    explicit SingularSystem(const std::string& what) : Error(what) {}
};

class ParseError : public Error {
  public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

// Generalized binomial C(i,k) = i(i-1)...(i-k+1)/k!, valid for any integer i
// (negative included), C(i,0) = 1.
inline Rational binomial_general(long long i, long long k) {
    if (k < 0) return 0;
    Integer num = 1;
    for (long long s = 0; s < k; ++s) num *= Integer(i - s);
    Integer den = 1;
    for (long long s = 2; s <= k; ++s) den *= Integer(s);
    return Rational(num, den);
}

inline std::string to_string(const Rational& r) { return r.str(); }

inline Rational rational_from_string(const std::string& s) {
    try {
        return Rational(s);
    } catch (const std::exception&) {
        throw ParseError("bad rational literal: '" + s + "'");
    }
}

}  // namespace kp2
