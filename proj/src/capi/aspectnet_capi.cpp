#include "aspectnet/aspectnet.h"
