#pragma once

#include <stdexcept>
#include <string>

namespace uqfarm {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct ShapeMismatch : Error {
    using Error::Error;
};
struct RankDeficient : Error {
    using Error::Error;
};
struct ZeroSigma : Error {
    using Error::Error;
};
struct EmptyInput : Error {
    using Error::Error;
};
struct SimFailure : Error {
    using Error::Error;
};
struct IndexOutOfRange : Error {
    using Error::Error;
};
struct UnknownWorker : Error {
    using Error::Error;
};
struct UnknownJob : Error {
    using Error::Error;
};
struct ConnectionLost : Error {
    using Error::Error;
};

} // namespace uqfarm
