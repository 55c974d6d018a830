#pragma once

#include "tdclean/baselines.hpp"
#include "tdclean/corpus.hpp"
#include "tdclean/diff.hpp"
#include "tdclean/git.hpp"
#include "tdclean/metrics.hpp"
#include "tdclean/model.hpp"
#include "tdclean/scan.hpp"
#include "tdclean/todo.hpp"
#include "tdclean/training.hpp"
