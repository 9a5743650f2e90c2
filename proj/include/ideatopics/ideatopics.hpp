#pragma once

#include "ideatopics/cluster.hpp"
#include "ideatopics/coherence.hpp"
#include "ideatopics/corpus.hpp"
#include "ideatopics/dimred.hpp"
#include "ideatopics/embed.hpp"
#include "ideatopics/error.hpp"
#include "ideatopics/matrix.hpp"
#include "ideatopics/pipeline.hpp"
#include "ideatopics/random.hpp"
#include "ideatopics/svg.hpp"
#include "ideatopics/synthetic.hpp"
#include "ideatopics/topics.hpp"
