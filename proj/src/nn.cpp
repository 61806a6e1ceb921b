#include "roomlayout/nn.hpp"

namespace roomlayout::nn {

TokenGroups window_groups(int tokens, int window, int shift) {
  if (window <= 0 || tokens % window != 0)
    throw ConfigError("window_groups: token count not divisible by window size");
  TokenGroups groups(tokens / window);
  for (int k = 0; k < tokens / window; ++k) {
    groups[k].resize(window);
    for (int t = 0; t < window; ++t) groups[k][t] = ((k * window + t + shift) % tokens + tokens) % tokens;
  }
  return groups;
}

TokenGroups global_group(int tokens) {
  TokenGroups groups(1);
  groups[0].resize(tokens);
  for (int t = 0; t < tokens; ++t) groups[0][t] = t;
  return groups;
}

}  // namespace roomlayout::nn
