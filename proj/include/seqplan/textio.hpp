#pragma once

// Text formatting helpers for CSV output.
//
// Doubles are printed with std::to_chars shortest round-trip form, which is
// locale-independent and stable across reruns, so emitted files can be
// compared byte for byte.

#include <charconv>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace seqplan {

inline std::string format_double(double value) {
    char buffer[64];
    auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (result.ec != std::errc()) {
        throw std::runtime_error("format_double: conversion failed");
    }
    return std::string(buffer, result.ptr);
}

inline double parse_double(const std::string& text) {
    char* end = nullptr;
    double value = std::strtod(text.c_str(), &end);
    if (end == text.c_str()) {
        throw std::runtime_error("parse_double: not a number: '" + text + "'");
    }
    return value;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : line) {
        if (c == sep) {
            parts.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    parts.push_back(current);
    return parts;
}

}  // namespace seqplan
