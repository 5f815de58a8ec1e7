// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace scratchplot {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Bad configuration: unknown model id, malformed config file, missing context for an active rule.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// The model server could not be reached or kept failing after retries.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts, int last_status)
        : Error(what), attempts_(attempts), last_status_(last_status) {}

    int attempts() const noexcept { return attempts_; }
    /// HTTP status of the last attempt, or -1 when no response was received.
    int last_status() const noexcept { return last_status_; }

private:
    int attempts_;
    int last_status_;
};

class WindowExceededError : public Error {
public:
    WindowExceededError(std::size_t limit, std::size_t requested)
        : Error("context window of " + std::to_string(limit) + " tokens exceeded (" +
                std::to_string(requested) + " requested)"),
          limit_(limit), requested_(requested) {}

    std::size_t limit() const noexcept { return limit_; }
    std::size_t requested() const noexcept { return requested_; }

private:
    std::size_t limit_;
    std::size_t requested_;
};

/// The backend does not provide the requested capability (e.g. NSP).
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// A debiasing candidate has no probability under one of the group's descriptions.
class CoverageError : public Error {
public:
    using Error::Error;
};

class RenderError : public Error {
public:
    explicit RenderError(std::string placeholder)
        : Error("no binding for placeholder <" + placeholder + ">"), placeholder_(std::move(placeholder)) {}

    const std::string& placeholder() const noexcept { return placeholder_; }

private:
    std::string placeholder_;
};

/// Input failed validation; `missing()` lists the offending field names.
class ValidationError : public Error {
public:
    ValidationError(const std::string& what, std::vector<std::string> missing)
        : Error(what), missing_(std::move(missing)) {}

    const std::vector<std::string>& missing() const noexcept { return missing_; }

private:
    std::vector<std::string> missing_;
};

class LookupError : public Error {
public:
    using Error::Error;
};

/// Parent plot elements required by a generation step are absent.
class DependencyError : public Error {
public:
    using Error::Error;
};

/// Content-plan sampling failed for `kind()`.
class SamplingError : public Error {
public:
    SamplingError(const std::string& what, std::string kind) : Error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Element-pool generation stopped part way; rerunning resumes from `next_unit()`.
class PoolGenerationError : public Error {
public:
    PoolGenerationError(const std::string& what, std::size_t next_unit, std::size_t written)
        : Error(what), next_unit_(next_unit), written_(written) {}

    std::size_t next_unit() const noexcept { return next_unit_; }
    std::size_t written() const noexcept { return written_; }

private:
    std::size_t next_unit_;
    std::size_t written_;
};

/// No story candidate survived; `diagnostics()` counts rejections per stage/filter.
class GenerationExhaustedError : public Error {
public:
    GenerationExhaustedError(const std::string& what, std::map<std::string, std::size_t> diagnostics)
        : Error(what + " " + format(diagnostics)), diagnostics_(std::move(diagnostics)) {}

    const std::map<std::string, std::size_t>& diagnostics() const noexcept { return diagnostics_; }

private:
    static std::string format(const std::map<std::string, std::size_t>& d);

    std::map<std::string, std::size_t> diagnostics_;
};

}  // namespace scratchplot
