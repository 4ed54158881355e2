/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <string>

#include "xflow/ccg.hpp"
#include "xflow/enumeration.hpp"
#include "xflow/mappings.hpp"

namespace xflow {

/// Graphviz renderings. Output depends only on the input, so equal inputs give
/// byte-identical text. Conversion operators are drawn as dashed boxes.
std::string emit_dot(const ExecutionPlan& plan);
std::string emit_dot(const InflatedPlan& plan);
std::string emit_dot(const ConversionTree& tree, const ChannelConversionGraph& ccg);

}  // namespace xflow
