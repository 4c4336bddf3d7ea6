#pragma once

#include <stdexcept>
#include <string>

namespace fledge {

/// Shape/length mismatch between a value and the manifest describing it.
class StructuralError : public std::runtime_error {
public:
    explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

/// Base for wire-format failures. decode_frame throws only subclasses of this.
class ProtocolError : public std::runtime_error {
public:
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

/// Frame shorter than its declared length, or header cut off.
class FramingError : public ProtocolError {
public:
    explicit FramingError(const std::string& what) : ProtocolError(what) {}
};

/// Frame delimits fine but the payload contents are malformed.
class PayloadError : public ProtocolError {
public:
    explicit PayloadError(const std::string& what) : ProtocolError(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace fledge
