#include "gpool/pooling.hpp"

namespace gpool {

std::string to_string(PoolMethod m) {
  switch (m) {
    case PoolMethod::sort:
      return "sort";
    case PoolMethod::geometric:
      return "geometric";
    case PoolMethod::mixed:
      return "mixed";
  }
  return "?";
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::euclidean:
      return "euclidean";
    case Metric::inner_product:
      return "inner_product";
    case Metric::cosine:
      return "cosine";
  }
  return "?";
}

PoolMethod parse_method(const std::string& s) {
  if (s == "sort") return PoolMethod::sort;
  if (s == "geometric" || s == "gp") return PoolMethod::geometric;
  if (s == "mixed" || s == "gp-mixed") return PoolMethod::mixed;
  throw std::invalid_argument("unknown pooling method '" + s + "'");
}

Metric parse_metric(const std::string& s) {
  if (s == "euclidean" || s == "l2") return Metric::euclidean;
  if (s == "inner_product" || s == "ip") return Metric::inner_product;
  if (s == "cosine" || s == "cos") return Metric::cosine;
  throw std::invalid_argument("unknown metric '" + s + "'");
}

}  // namespace gpool
