#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tpmf {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor, matrix or grid dimensions that do not fit together.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Argument outside the documented domain (rank 0, even grid count, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A dense rendering would exceed the configured entry cap.
class CapExceeded : public Error {
public:
    using Error::Error;
};

/// Query outside the terrain raster or on a NODATA cell.
class OutOfMap : public Error {
public:
    using Error::Error;
};

/// A simulated trajectory left the terrain raster.
class MapExit : public Error {
public:
    MapExit(std::size_t step, const std::string& what)
        : Error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// A filter lost its probability mass or its covariance stopped being
/// positive definite. Harnesses record this per run instead of aborting.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents (DEM header, scenario JSON, ...).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure; the message names the path.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace tpmf
