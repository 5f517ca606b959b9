#pragma once
#include <stdexcept>
#include <string>

namespace adw {

/// Domain failure: a mathematical condition of the construction is violated.
/// The CLI maps these to exit code 1.
class DomainError : public std::runtime_error {
public:
    DomainError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }
private:
    std::string stage_;
};

struct IntegrationError     : DomainError { explicit IntegrationError(const std::string& w) : DomainError("integrate", w) {} };
struct EscapeError          : DomainError { explicit EscapeError(const std::string& w) : DomainError("section_return", w) {} };
struct ConditionError       : DomainError { explicit ConditionError(const std::string& w) : DomainError("splitting", w) {} };
struct ContinuationError    : DomainError { explicit ContinuationError(const std::string& w) : DomainError("continuation", w) {} };
struct ChartError           : DomainError { explicit ChartError(const std::string& w) : DomainError("chart", w) {} };
struct ChainError           : DomainError { explicit ChainError(const std::string& w) : DomainError("chain", w) {} };
struct RecordError          : DomainError { explicit RecordError(const std::string& w) : DomainError("record", w) {} };
struct GraphError           : DomainError { explicit GraphError(const std::string& w) : DomainError("stable_graph", w) {} };
struct AlignmentError       : DomainError { explicit AlignmentError(const std::string& w) : DomainError("alignment", w) {} };
struct TorsionError         : DomainError { explicit TorsionError(const std::string& w) : DomainError("torsion", w) {} };
struct CertificateError     : DomainError { explicit CertificateError(const std::string& w) : DomainError("certificate", w) {} };
struct CenterError          : DomainError { explicit CenterError(const std::string& w) : DomainError("centers", w) {} };
struct ErgodizationError    : DomainError { explicit ErgodizationError(const std::string& w) : DomainError("ergodization", w) {} };
struct BudgetError          : DomainError { explicit BudgetError(const std::string& w) : DomainError("remainder_budget", w) {} };
struct ShadowingError       : DomainError { explicit ShadowingError(const std::string& w) : DomainError("shadowing", w) {} };

/// Bad input (malformed config, missing file, bad flag). Exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace adw
