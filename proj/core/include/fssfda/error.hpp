#pragma once

#include <stdexcept>
#include <string>

namespace fssfda {

// Base for every error the toolkit raises on a contract violation.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Dataset ingestion problems: missing directories, empty classes, bad images.
class IngestionError : public Error {
public:
    using Error::Error;
};

// Splitting / few-shot sampling problems: class too small, exhausted pool.
class SamplingError : public Error {
public:
    using Error::Error;
};

// Scenario construction problems: bad n_known, bad imbalance factor.
class ScenarioError : public Error {
public:
    using Error::Error;
};

// Model construction / checkpoint problems.
class ModelError : public Error {
public:
    using Error::Error;
};

// Training-time problems: label outside vocabulary, empty target set.
class TrainingError : public Error {
public:
    using Error::Error;
};

// Metric / aggregation problems: length mismatch, missing cells.
class EvaluationError : public Error {
public:
    using Error::Error;
};

// Sweep / selection problems.
class SelectionError : public Error {
public:
    using Error::Error;
};

// Config file problems; message carries the offending field path.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace fssfda
