#pragma once

#include <stdexcept>
#include <string>

namespace bpec {

struct FieldTooSmall : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SingularMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TraceExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DesyncError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FramingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PacketTooSmall : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OverlapError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DegenerateChannel : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TooManyUsers : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct UnsupportedN : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidSurvival : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace bpec
