#pragma once

#include "bratsos/csv.hpp"
#include "bratsos/distance_transform.hpp"
#include "bratsos/error.hpp"
#include "bratsos/neuralcore.hpp"
#include "bratsos/nifti.hpp"
#include "bratsos/posenc.hpp"
#include "bratsos/radiomics.hpp"
#include "bratsos/segmetrics.hpp"
#include "bratsos/subject.hpp"
#include "bratsos/survreg/evaluate.hpp"
#include "bratsos/survreg/feature_matrix.hpp"
#include "bratsos/survreg/gbdt.hpp"
#include "bratsos/survreg/model.hpp"
#include "bratsos/survreg/normalize.hpp"
#include "bratsos/survreg/pca.hpp"
#include "bratsos/volume.hpp"
