#pragma once

#include <stdexcept>
#include <string>

namespace fprobe {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// corpus_index
struct EmptyTextError : Error {
    using Error::Error;
};
struct InvalidPatternError : Error {
    using Error::Error;
};
struct BadMagicError : Error {
    using Error::Error;
};
struct VersionMismatchError : Error {
    using Error::Error;
};
struct CorruptPayloadError : Error {
    using Error::Error;
};
struct ShardChecksumMismatchError : Error {
    using Error::Error;
};
struct ShardMissingError : Error {
    using Error::Error;
};
struct SeparatorInDocumentError : Error {
    using Error::Error;
};

// triple_store / entity_catalog
struct MalformedRowError : Error {
    using Error::Error;
};
struct MissingFrequencyError : Error {
    using Error::Error;
};

// prompt_builder
struct TemplateError : Error {
    using Error::Error;
};
struct NoAliasesError : Error {
    using Error::Error;
};

// probe_runner
struct HttpError : Error {
    int status = 0;
    HttpError(int status_code, const std::string& what)
        : Error(what), status(status_code) {}
};
struct TimeoutError : Error {
    using Error::Error;
};
struct ExhaustedRetriesError : Error {
    using Error::Error;
};

// stats
struct EmptyInputError : Error {
    using Error::Error;
};
struct DegenerateVarianceError : Error {
    using Error::Error;
};

}  // namespace fprobe
