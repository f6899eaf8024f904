from django.db import models

# No models needed - hop-count formulas are pure functions of their inputs
