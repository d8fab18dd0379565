#include "nnal/error.hpp"

namespace nnal {

namespace {

template <class E>
bool rethrow_as(const std::exception& e, const std::string& message) {
    if (dynamic_cast<const E*>(&e) != nullptr) throw E(message);
    return false;
}

}  // namespace

void rethrow_with_context(const std::exception& e, const std::string& context) {
    const std::string message = context + ": " + e.what();
    rethrow_as<ParseError>(e, message);
    rethrow_as<EmptyInputError>(e, message);
    rethrow_as<SizeError>(e, message);
    rethrow_as<StateError>(e, message);
    rethrow_as<MembershipError>(e, message);
    rethrow_as<DimensionError>(e, message);
    rethrow_as<NumericalError>(e, message);
    rethrow_as<IoError>(e, message);
    throw Error(message);
}

}  // namespace nnal
