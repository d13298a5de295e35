#include "cte/errors.hpp"

namespace cte {

DivisionByZeroError::DivisionByZeroError(std::size_t frequency)
    : Error("zero regularization denominator at frequency " +
            std::to_string(frequency) + " (lambda = 0)"),
      frequency_(frequency) {}

}  // namespace cte
